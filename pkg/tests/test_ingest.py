"""Unit tests for CSV ingestion."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import pytest

from hstar.errors import EmptyColumn, InvalidParameter, ParseError
from hstar.utils.ingest import ingest_csv, ingest_labels, ingest_paired

WriteCsv = Callable[[str, str], Path]


class TestIngestCsv:
    """Test reading one numeric column."""

    def test_by_name(self, write_csv: WriteCsv) -> None:
        """Test selecting a column by its header."""
        path = write_csv("scores.csv", "id,score\na,1.5\nb,-2\nc,3e2\n")

        assert ingest_csv(path, "score") == [1.5, -2.0, 300.0]

    def test_by_position(self, write_csv: WriteCsv) -> None:
        """Test selecting a column by zero-based index."""
        path = write_csv("scores.csv", "id,score\na,1.5\nb,2.5\n")

        assert ingest_csv(path, "1") == [1.5, 2.5]

    def test_single_column_needs_no_name(self, write_csv: WriteCsv) -> None:
        """Test that a one-column file is read without a column argument."""
        path = write_csv("x.csv", "x\n4\n5\n6\n")

        assert ingest_csv(path) == [4.0, 5.0, 6.0]

    def test_whitespace_is_stripped(self, write_csv: WriteCsv) -> None:
        """Test padded headers and cells."""
        path = write_csv("x.csv", "id, score \na, 1.0\nb,  2.0\n")

        assert ingest_csv(path, "score") == [1.0, 2.0]

    def test_non_numeric_cell(self, write_csv: WriteCsv) -> None:
        """Test that the error names the file line, header being line 1."""
        path = write_csv("x.csv", "x\n1\n2\nfoo\n")

        with pytest.raises(ParseError) as exc:
            ingest_csv(path)

        assert exc.value.details["row"] == 4
        assert exc.value.details["column"] == "x"
        assert "line 4" in exc.value.message

    def test_empty_cell(self, write_csv: WriteCsv) -> None:
        """Test that a missing value is reported."""
        path = write_csv("x.csv", "a,b\n1,2\n,3\n")

        with pytest.raises(ParseError, match="line 3, column 'a': missing value"):
            ingest_csv(path, "a")

    @pytest.mark.parametrize("cell", ["inf", "-inf", "nan"])
    def test_non_finite_cell(self, write_csv: WriteCsv, cell: str) -> None:
        """Test that infinities and NaN are refused."""
        path = write_csv("x.csv", f"x\n1\n{cell}\n")

        with pytest.raises(ParseError, match="not finite"):
            ingest_csv(path)

    def test_header_only(self, write_csv: WriteCsv) -> None:
        """Test that a file without rows raises EmptyColumn."""
        with pytest.raises(EmptyColumn):
            ingest_csv(write_csv("x.csv", "x\n"))

    def test_empty_file(self, write_csv: WriteCsv) -> None:
        """Test that a zero-byte file raises EmptyColumn."""
        with pytest.raises(EmptyColumn):
            ingest_csv(write_csv("x.csv", ""))

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test that a missing file is a parse error."""
        with pytest.raises(ParseError, match="file not found"):
            ingest_csv(tmp_path / "absent.csv")

    @pytest.mark.parametrize("column", [None, "z", "5"])
    def test_unresolvable_column(self, write_csv: WriteCsv, column: str | None) -> None:
        """Test ambiguous, unknown and out-of-range column choices."""
        path = write_csv("x.csv", "a,b\n1,2\n")

        with pytest.raises(InvalidParameter) as exc:
            ingest_csv(path, column)

        assert exc.value.details["columns"] == ["a", "b"]


class TestIngestLabels:
    """Test reading label columns."""

    def test_labels_are_verbatim_strings(self, write_csv: WriteCsv) -> None:
        """Test that labels keep their text."""
        path = write_csv("x.csv", "id,score\n007,1\n b ,2\n")

        assert ingest_labels(path, "id") == ["007", "b"]


class TestIngestPaired:
    """Test reading id,pre,post files."""

    def test_bundled_study(self, appendix_e_path: Path) -> None:
        """Test the shipped 180-subject file."""
        study = ingest_paired(appendix_e_path)

        assert len(study.ids) == 180
        assert study.ids[25] == "26"
        assert (study.pre_scores[172], study.post_scores[172]) == (3.22, 2.37)
        assert study.log_transform is True

    def test_log_transform_flag(self, write_csv: WriteCsv) -> None:
        """Test that the transform choice is carried."""
        path = write_csv("p.csv", "id,pre,post\na,1,2\n")

        assert ingest_paired(path, log_transform=False).log_transform is False

    def test_extra_columns_are_ignored(self, write_csv: WriteCsv) -> None:
        """Test that unrelated columns do not matter."""
        path = write_csv("p.csv", "note,post,id,pre\nx,2,a,1\ny,4,b,3\n")

        study = ingest_paired(path)

        assert study.ids == ["a", "b"]
        assert study.pre_scores == [1.0, 3.0]
        assert study.post_scores == [2.0, 4.0]

    def test_missing_columns(self, write_csv: WriteCsv) -> None:
        """Test that the missing columns are listed."""
        path = write_csv("p.csv", "id,before,after\na,1,2\n")

        with pytest.raises(ParseError) as exc:
            ingest_paired(path)

        assert exc.value.details["missing"] == ["pre", "post"]

    def test_duplicate_id(self, write_csv: WriteCsv) -> None:
        """Test that a repeated id names its line."""
        path = write_csv("p.csv", "id,pre,post\na,1,2\nb,1,2\na,3,4\n")

        with pytest.raises(ParseError) as exc:
            ingest_paired(path)

        assert exc.value.details["row"] == 4

    def test_bad_score(self, write_csv: WriteCsv) -> None:
        """Test that score cells are parsed strictly."""
        path = write_csv("p.csv", "id,pre,post\na,1,2\nb,x,2\n")

        with pytest.raises(ParseError, match="line 3, column 'pre'"):
            ingest_paired(path)

    def test_no_rows(self, write_csv: WriteCsv) -> None:
        """Test that a header-only file raises EmptyColumn."""
        with pytest.raises(EmptyColumn):
            ingest_paired(write_csv("p.csv", "id,pre,post\n"))
