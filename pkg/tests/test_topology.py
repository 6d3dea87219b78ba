import numpy as np
import pytest
from sklearn.base import clone

from fogplan.params import ConfigError, ScenarioParams
from fogplan.topology import (Topology, WeightedKMeans, apportion, cluster_servers,
                              distance_matrix, euclidean_distance, generate_topology,
                              load_cities, reachable_set)


def test_distance_symmetric_and_zero_on_diagonal():
    a, b = (48.85, 2.35), (51.5, -0.12)
    assert euclidean_distance(a, b) == pytest.approx(euclidean_distance(b, a))
    assert euclidean_distance(a, a) == 0.0
    d = distance_matrix([a, b], [a, b])
    assert d[0, 1] == pytest.approx(euclidean_distance(a, b))


def test_distance_along_equator():
    # one degree of longitude on the equator
    assert euclidean_distance((0, 0), (0, 1)) == pytest.approx(6378.137 * np.pi / 180)


def test_apportion_sums_and_is_house_monotone():
    w = [5.0, 3.0, 1.0, 1.0]
    prev = apportion(w, 0)
    for total in range(1, 60):
        seats = apportion(w, total)
        assert seats.sum() == total
        assert np.all(seats >= prev)
        prev = seats


def test_weighted_kmeans_inertia_non_increasing():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0, 1, (50, 2)), rng.normal(8, 1, (50, 2))])
    w = rng.uniform(0.5, 2.0, 100)
    km = WeightedKMeans(n_clusters=2, random_state=1).fit(X, sample_weight=w)
    h = km.inertia_history_
    assert all(b <= a + 1e-9 for a, b in zip(h, h[1:]))
    assert set(km.predict(X[:50])) != set(km.predict(X[50:]))


def test_weighted_kmeans_is_sklearn_estimator():
    km = WeightedKMeans(n_clusters=3, max_iter=7)
    twin = clone(km)
    assert twin.get_params() == km.get_params()
    assert km.set_params(n_clusters=4).n_clusters == 4


def test_weighted_kmeans_deterministic():
    X = np.random.default_rng(2).random((40, 2))
    a = WeightedKMeans(3, random_state=5).fit(X).cluster_centers_
    b = WeightedKMeans(3, random_state=5).fit(X).cluster_centers_
    np.testing.assert_array_equal(a, b)


def test_cluster_servers_count():
    cities = load_cities()[:30]
    assert len(cluster_servers(cities, 4, seed=0)) == 4
    with pytest.raises(ValueError):
        cluster_servers(cities, 31)


def test_bundled_cities_sorted_by_population():
    pops = [c.population for c in load_cities()]
    assert pops == sorted(pops, reverse=True)


def test_generate_topology_shapes_and_consumer_total():
    p = ScenarioParams(n_consumers=5000, n_fogs=20, n_servers=3)
    t = generate_topology(p, seed=1)
    assert t.n_fogs == 20 and t.n_servers == 3
    assert t.consumers_per_city.sum() == 5000
    assert t.interfog_hops.shape == (20, 20)
    assert np.all(np.diag(t.interfog_hops) == 0)
    assert all(0 <= s < 3 for s in t.server_of_fog)


def test_topology_json_round_trip(tmp_path):
    t = generate_topology(ScenarioParams(n_consumers=300, n_fogs=10, n_servers=2), seed=4)
    path = tmp_path / "topo.json"
    t.save(path)
    back = Topology.load(path)
    assert back.to_json() == t.to_json()
    np.testing.assert_array_equal(back.interfog_hops, t.interfog_hops)


def test_reachable_set_holds_local_consumers_sorted_by_distance():
    t = generate_topology(ScenarioParams(n_consumers=100, n_fogs=10, n_servers=2), seed=0)
    for f in range(t.n_fogs):
        pref = reachable_set(f, t)
        local = np.nonzero(t.consumer_city == t.fog_nodes[f].city)[0]
        assert set(local) <= set(pref)
        d = t.city_fog_dist[t.consumer_city[pref], f]
        assert np.all(np.diff(d) >= 0)
    assert len(reachable_set(0, t, radius=0.0)) == t.consumers_per_city[0]


def test_generate_topology_rejects_bad_config():
    with pytest.raises(ConfigError):
        generate_topology(ScenarioParams(n_fogs=4, n_servers=5))
