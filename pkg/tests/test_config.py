import pytest

from app.config import Config


def test_validate_cap_bounds():
    config = Config()
    assert config.validate_cap(2) == 2
    assert config.validate_cap(config.MAX_CAP) == config.MAX_CAP
    with pytest.raises(ValueError, match="2.."):
        config.validate_cap(1)
    with pytest.raises(ValueError):
        config.validate_cap(config.MAX_CAP + 1)


def test_dense_rank_threshold():
    config = Config(DENSE_BASIS_MAX_RANK=5)
    assert config.is_dense_rank(5)
    assert not config.is_dense_rank(6)
