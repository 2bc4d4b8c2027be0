"""Unit tests for error handling utilities."""

import pytest

from rankmap.utils.errors import (
    ConfigurationError,
    DimensionMismatchError,
    InstabilityError,
    MatrixFormatError,
    RankmapError,
    _find_similar_names,
    _levenshtein_distance,
    display_error,
)


class TestLevenshteinDistance:
    """Test Levenshtein distance calculation."""

    def test_identical_strings(self):
        """Test distance of identical strings is 0."""
        assert _levenshtein_distance("ranks", "ranks") == 0

    def test_one_substitution(self):
        """Test one character substitution."""
        assert _levenshtein_distance("ridge", "ridgy") == 1

    def test_one_insertion(self):
        """Test one character insertion."""
        assert _levenshtein_distance("seed", "seeds") == 1

    def test_completely_different(self):
        """Test completely different strings."""
        assert _levenshtein_distance("abc", "xyz") == 3


class TestFindSimilarNames:
    """Test similar name finding."""

    def test_typo_found(self):
        """Test a near miss is suggested."""
        assert _find_similar_names("rnaks", ["ranks", "seeds", "tasks"]) == ["ranks"]

    def test_case_insensitive(self):
        """Test matching ignores case."""
        assert _find_similar_names("Ridge", ["ridge"]) == ["ridge"]

    def test_no_match(self):
        """Test distant names are not suggested."""
        assert _find_similar_names("experiment", ["ranks", "seeds"]) == []


class TestErrorClasses:
    """Test rankmap exception types."""

    def test_hierarchy(self):
        """Test every error is a RankmapError."""
        for error in (
            ConfigurationError("bad"),
            DimensionMismatchError("x", 2, 3),
            InstabilityError(7),
            MatrixFormatError("bad", 0),
        ):
            assert isinstance(error, RankmapError)

    def test_configuration_hint(self):
        """Test an unknown key gets a did-you-mean hint and its field path."""
        error = ConfigurationError(
            "Unknown configuration key 'rnaks'", field_path="rnaks", known_fields=["ranks"]
        )
        assert error.hint == "Did you mean: ranks?"
        assert "Field: rnaks" in error.details
        assert error.field_path == "rnaks"

    def test_configuration_default_hint(self):
        """Test errors without suggestions point at the help text."""
        assert "--help" in ConfigurationError("bad").hint

    def test_matrix_format_offset(self):
        """Test the byte offset is kept and shown."""
        error = MatrixFormatError("Bad magic", 0, path="M.rkmp")
        assert error.offset == 0
        assert "Byte offset: 0" in error.details
        assert "M.rkmp" in error.details

    def test_display(self, capsys):
        """Test errors render message and hint to stderr."""
        display_error(RankmapError("Something failed", hint="Try again"))
        err = capsys.readouterr().err
        assert "Something failed" in err
        assert "Try again" in err

    def test_display_unexpected(self, capsys):
        """Test foreign exceptions are labelled unexpected."""
        display_error(ValueError("boom"))
        assert "Unexpected error: boom" in capsys.readouterr().err


@pytest.mark.parametrize("step", [1, 250])
def test_instability_mentions_step(step):
    """Test the failing step is reported."""
    assert str(step) in InstabilityError(step).message
