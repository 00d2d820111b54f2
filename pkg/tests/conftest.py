import collections
from pathlib import Path

import pytest

from divrec.catalog import load_catalog, load_distance_config, load_genre_graph

DATA = Path(__file__).parent / "data"


def bfs_hops(edges: list[tuple[str, str]], start: str) -> dict[str, int]:
    """Independent breadth-first oracle used to cross-check graph distances."""
    adj = collections.defaultdict(set)
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    dist = {start: 0}
    queue = collections.deque([start])
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if nb not in dist:
                dist[nb] = dist[node] + 1
                queue.append(nb)
    return dist


GENRE_MAP_EDGES = [
    ("trip-hop", "hip-hop"),
    ("trip-hop", "electronic"),
    ("electronic", "acid-house"),
    ("electronic", "electro-jazz"),
    ("hip-hop", "dub"),
    ("hip-hop", "indie-soul"),
    ("electro-jazz", "jazz"),
    ("jazz", "classical"),
    ("indie-soul", "rock"),
    ("rock", "hard-rock"),
]


@pytest.fixture(scope="session")
def genre_map_graph():
    return load_genre_graph(DATA / "genre_map.tsv")


@pytest.fixture(scope="session")
def genre_catalog(genre_map_graph):
    criteria, calibration = load_distance_config(DATA / "genre_distance.json")
    return load_catalog(DATA / "genre_catalog.jsonl", criteria=criteria,
                        genre_graph=genre_map_graph, calibration=calibration)
