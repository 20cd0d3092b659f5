# Keeps the tests directory importable so shared oracles can be imported.
