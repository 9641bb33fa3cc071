"""Test markov-chart-design."""

import markov_chart_design


def test_import() -> None:
    """Test that the package can be imported."""
    assert isinstance(markov_chart_design.__name__, str)
    assert markov_chart_design.__version__ == "0.1.0"
    assert "minimize" in markov_chart_design.__all__
