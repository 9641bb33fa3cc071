"""
Required so other packages with `test/` don't get picked up by pytest
"""
