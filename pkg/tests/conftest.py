import pytest

import riverdense as rd


@pytest.fixture(scope="session")
def basin8_dir(tmp_path_factory):
    """Deterministic 8-station fixture: edge CSV plus hourly gauge CSVs."""
    root = tmp_path_factory.mktemp("basin8")
    basin = rd.generate_basin(8, seed=21, hours=480)
    rd.write_edge_csv(basin.network, root / "edges.csv")
    rd.basin_to_gauge_csvs(basin, root / "gauges")
    return root
