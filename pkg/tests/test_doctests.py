import doctest

from fisheripm import estimators


def test_estimator_docstring_example():
    result = doctest.testmod(estimators, optionflags=doctest.ELLIPSIS)
    assert result.attempted >= 1 and result.failed == 0
