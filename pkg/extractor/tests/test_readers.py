import pytest

from embex.readers import ReaderError, read_csv, read_jsonl


def test_jsonl_rows_and_vocab(tmp_path):
    path = str(tmp_path / "r.jsonl")
    with open(path, "w") as fh:
        fh.write('{"id": "a", "text": "one", "label": "x"}\n')
        fh.write('{"id": "b", "text": "two", "label": "y"}\n')
        fh.write('{"id": "c", "text": "three", "label": "x"}\n')
    rows, vocab = read_jsonl(path)
    assert vocab == ["x", "y"]
    assert rows == [("a", "one", 0), ("b", "two", 1), ("c", "three", 0)]


def test_jsonl_missing_field_cites_line(tmp_path):
    path = str(tmp_path / "r.jsonl")
    with open(path, "w") as fh:
        fh.write('{"id": "a", "text": "one", "label": "x"}\n')
        fh.write('{"id": "b", "text": "two"}\n')
    with pytest.raises(ReaderError, match="line 2"):
        read_jsonl(path)


def test_jsonl_duplicate_ids_cite_both_lines(tmp_path):
    path = str(tmp_path / "r.jsonl")
    with open(path, "w") as fh:
        fh.write('{"id": "a", "text": "one", "label": "x"}\n')
        fh.write('{"id": "a", "text": "two", "label": "y"}\n')
    with pytest.raises(ReaderError, match="lines 1 and 2"):
        read_jsonl(path)


def test_csv_with_custom_fields(tmp_path):
    path = str(tmp_path / "r.csv")
    with open(path, "w") as fh:
        fh.write("case,note,therapy\n")
        fh.write("c1,first note,rad\n")
        fh.write("c2,second note,sys\n")
    rows, vocab = read_csv(path, text_field="note", label_field="therapy", id_field="case")
    assert vocab == ["rad", "sys"]
    assert rows == [("c1", "first note", 0), ("c2", "second note", 1)]


def test_csv_missing_column(tmp_path):
    path = str(tmp_path / "r.csv")
    with open(path, "w") as fh:
        fh.write("note,label\n")
        fh.write("only note,\n")
    with pytest.raises(ReaderError, match="line 2"):
        read_csv(path, text_field="note", label_field="label", id_field=None)


def test_ids_synthesized_when_absent(tmp_path):
    path = str(tmp_path / "r.jsonl")
    with open(path, "w") as fh:
        fh.write('{"text": "one", "label": "x"}\n')
        fh.write('{"text": "two", "label": "x"}\n')
    rows, _ = read_jsonl(path)
    assert [r[0] for r in rows] == ["r1", "r2"]
