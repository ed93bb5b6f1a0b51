"""Gemeinsame pytest-Einstellungen."""


def pytest_configure(config) -> None:
    config.addinivalue_line("markers", "slow: Laufzeit- und Trendmessungen auf größeren Stichproben")
