"""Synthetic smart-grid topology: cities, fog nodes, cloud servers and links."""

import csv
import heapq
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from ._rng import make_rng
from .params import ConfigError, ScenarioParams

TOPOLOGY_SCHEMA = 1
EARTH_RADIUS_KM = 6378.137
DEG = math.pi / 180.0


@dataclass(frozen=True)
class City:
    id: int
    name: str
    population: int
    coord: tuple

    def __post_init__(self):
        lat, lon = self.coord
        if self.population <= 0:
            raise ConfigError(f"city {self.name!r}: population must be > 0")
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise ConfigError(f"city {self.name!r}: coordinates out of range")


@dataclass(frozen=True)
class FogNode:
    id: int
    city: int
    bandwidth_units: tuple
    per_bu_rate: float
    service_rate: float
    processing_elements: int
    physical_servers: int
    vm_cap_per_server: int
    storage_cap: float
    proc_cap: float
    energy_rate: float = 3.7

    def __post_init__(self):
        if len(self.bandwidth_units) < 1:
            raise ConfigError(f"fog {self.id}: needs at least one bandwidth unit")
        if self.service_rate <= 0:
            raise ConfigError(f"fog {self.id}: service_rate must be > 0")

    @property
    def max_vms(self):
        return self.physical_servers * self.vm_cap_per_server


@dataclass(frozen=True)
class CloudServer:
    id: int
    coord: tuple
    device_capacity: int
    power_draw: float           # MW, paired with device_capacity
    machine_count_max: int
    cpu_freq_range: tuple


# ---------------------------------------------------------------------------
# geometry


def euclidean_distance(a, b):
    """Planar distance in km after an equirectangular projection.

    The projection is centred on the mean latitude of the two points, which
    keeps the result symmetric and exact along the equator.
    """
    lat1, lon1 = a
    lat2, lon2 = b
    phi = 0.5 * (lat1 + lat2) * DEG
    dx = (lon2 - lon1) * DEG * math.cos(phi)
    dy = (lat2 - lat1) * DEG
    return EARTH_RADIUS_KM * math.hypot(dx, dy)


def distance_matrix(coords_a, coords_b):
    """Vectorised :func:`euclidean_distance` between two coordinate arrays."""
    a = np.asarray(coords_a, dtype=float).reshape(-1, 2)
    b = np.asarray(coords_b, dtype=float).reshape(-1, 2)
    phi = 0.5 * (a[:, None, 0] + b[None, :, 0]) * DEG
    dx = (b[None, :, 1] - a[:, None, 1]) * DEG * np.cos(phi)
    dy = (b[None, :, 0] - a[:, None, 0]) * DEG
    return EARTH_RADIUS_KM * np.hypot(dx, dy)


# ---------------------------------------------------------------------------
# clustering


class WeightedKMeans(ClusterMixin, BaseEstimator):
    """Lloyd's k-means with sample weights and weighted k-means++ seeding.

    Parameters
    ----------
    n_clusters : int
    max_iter : int
        Hard cap on Lloyd iterations.
    tol : float
        Stop once the relative decrease of the weighted inertia falls below it.
    random_state : int or numpy Generator

    Attributes
    ----------
    cluster_centers_ : ndarray of shape (n_clusters, n_features)
    labels_ : ndarray of shape (n_samples,)
    inertia_ : float
        Weighted within-cluster sum of squares.
    inertia_history_ : list of float
        Inertia after every assignment step; non-increasing.
    n_iter_ : int
    """

    def __init__(self, n_clusters=8, max_iter=100, tol=1e-9, random_state=None):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _seed(self, X, w, rng):
        k = self.n_clusters
        n = X.shape[0]
        first = rng.choice(n, p=w / w.sum())
        centers = [X[first]]
        d2 = ((X - X[first]) ** 2).sum(axis=1)
        for _ in range(1, k):
            pot = w * d2
            if pot.sum() <= 0:
                # every remaining point coincides with a center
                idx = int(np.argmax(w))
            else:
                idx = rng.choice(n, p=pot / pot.sum())
            centers.append(X[idx])
            d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
        return np.array(centers, dtype=float)

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=np.float64)
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.n_clusters > X.shape[0]:
            raise ValueError("n_clusters cannot exceed the number of samples")
        w = np.ones(X.shape[0]) if sample_weight is None else np.asarray(sample_weight, float)
        if w.shape != (X.shape[0],) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("sample_weight must be non-negative with positive sum")
        rng = make_rng(self.random_state if self.random_state is not None else 0)

        centers = self._seed(X, w, rng)
        history = []
        labels = None
        for it in range(self.max_iter):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            labels = np.argmin(d2, axis=1)
            inertia = float((w * d2[np.arange(len(X)), labels]).sum())
            history.append(inertia)
            if len(history) > 1:
                prev = history[-2]
                if prev - inertia <= self.tol * max(prev, 1e-300):
                    break
            new = centers.copy()
            for j in range(self.n_clusters):
                m = labels == j
                wm = w[m]
                if wm.sum() > 0:
                    new[j] = (X[m] * wm[:, None]).sum(axis=0) / wm.sum()
                else:
                    # empty cluster: move it to the worst-served point
                    far = int(np.argmax(w * d2[np.arange(len(X)), labels]))
                    new[j] = X[far]
            centers = new
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        self.labels_ = np.argmin(d2, axis=1)
        self.inertia_ = float((w * d2[np.arange(len(X)), self.labels_]).sum())
        if self.inertia_ < history[-1]:
            history.append(self.inertia_)
        self.cluster_centers_ = centers
        self.inertia_history_ = history
        self.n_iter_ = len(history)
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        d2 = ((X[:, None, :] - self.cluster_centers_[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)


def cluster_servers(cities, k, seed=0, max_iter=100, tol=1e-9):
    """Place ``k`` cloud servers at population-weighted k-means centroids.

    Clustering runs on raw (lat, lon) degrees.
    """
    if k <= 0:
        raise ValueError("k must be >= 1")
    if k > len(cities):
        raise ValueError("k cannot exceed the number of cities")
    X = np.array([c.coord for c in cities], dtype=float)
    w = np.array([c.population for c in cities], dtype=float)
    km = WeightedKMeans(n_clusters=k, max_iter=max_iter, tol=tol, random_state=seed)
    km.fit(X, sample_weight=w)
    return [tuple(float(v) for v in c) for c in km.cluster_centers_]


# ---------------------------------------------------------------------------
# cities and consumers


def load_cities(path=None):
    """Read a ``name,population,lat,lon`` CSV; the bundled snapshot by default."""
    if path is None:
        text = resources.files("fogplan.data").joinpath("cities.csv").read_text()
    else:
        with open(path, newline="") as fh:
            text = fh.read()
    rows = list(csv.DictReader(text.splitlines()))
    if not rows:
        raise ConfigError("city table is empty")
    missing = {"name", "population", "lat", "lon"} - set(rows[0])
    if missing:
        raise ConfigError(f"city table lacks columns: {sorted(missing)}")
    cities = [
        City(i, r["name"], int(r["population"]), (float(r["lat"]), float(r["lon"])))
        for i, r in enumerate(rows)
    ]
    # largest first, stable on file order
    order = sorted(range(len(cities)), key=lambda i: (-cities[i].population, i))
    return [City(j, cities[i].name, cities[i].population, cities[i].coord)
            for j, i in enumerate(order)]


def apportion(weights, total):
    """Split ``total`` integer seats proportionally (Jefferson / D'Hondt).

    The method is house-monotone: raising ``total`` never lowers any share,
    so consumer populations of a sweep are nested.
    """
    w = np.asarray(weights, dtype=float)
    if total < 0:
        raise ValueError("total must be >= 0")
    seats = np.zeros(len(w), dtype=np.int64)
    if total == 0 or w.sum() <= 0:
        return seats
    seats[:] = np.floor(w * total / w.sum())
    # floor at a divisor is a valid intermediate apportionment; finish greedily
    heap = [(-w[i] / (seats[i] + 1), i) for i in range(len(w))]
    heapq.heapify(heap)
    for _ in range(int(total - seats.sum())):
        _, i = heapq.heappop(heap)
        seats[i] += 1
        heapq.heappush(heap, (-w[i] / (seats[i] + 1), i))
    return seats


# ---------------------------------------------------------------------------
# topology


@dataclass
class Topology:
    cities: list
    fog_nodes: list
    servers: list
    consumers_per_city: np.ndarray
    reach_radius: np.ndarray                  # km, per city
    params_hash: str = ""
    seed: int = 0
    hop_length_km: float = 1000.0
    hop_matrix: np.ndarray | None = None      # explicit inter-fog hop counts
    preference: list | None = None            # explicit per-fog consumer lists

    # derived, rebuilt by _derive()
    consumer_city: np.ndarray = field(init=False, repr=False)
    dist: np.ndarray = field(init=False, repr=False)
    city_fog_dist: np.ndarray = field(init=False, repr=False)
    fog_server_dist: np.ndarray = field(init=False, repr=False)
    server_of_fog: np.ndarray = field(init=False, repr=False)
    interfog_hops: np.ndarray = field(init=False, repr=False)
    pref_lists: list = field(init=False, repr=False)
    bu_owner: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.consumers_per_city = np.asarray(self.consumers_per_city, dtype=np.int64)
        self.reach_radius = np.asarray(self.reach_radius, dtype=float)
        self._derive()

    def _derive(self):
        city_xy = np.array([c.coord for c in self.cities], dtype=float).reshape(-1, 2)
        fog_xy = city_xy[[f.city for f in self.fog_nodes]]
        self.consumer_city = np.repeat(np.arange(len(self.cities)), self.consumers_per_city)
        self.dist = distance_matrix(fog_xy, fog_xy)
        np.fill_diagonal(self.dist, 0.0)
        self.dist = 0.5 * (self.dist + self.dist.T)
        self.city_fog_dist = distance_matrix(city_xy, fog_xy)
        if self.servers:
            self.fog_server_dist = distance_matrix(fog_xy, [s.coord for s in self.servers])
            self.server_of_fog = np.argmin(self.fog_server_dist, axis=1)
        else:
            self.fog_server_dist = np.zeros((len(self.fog_nodes), 0))
            self.server_of_fog = np.zeros(len(self.fog_nodes), dtype=np.int64)
        if self.hop_matrix is None:
            hops = 1 + np.floor(self.dist / self.hop_length_km)
            np.fill_diagonal(hops, 0)
        else:
            hops = np.asarray(self.hop_matrix)
        self.interfog_hops = hops.astype(np.int64)
        if self.preference is None:
            self.pref_lists = [self._reachable(f) for f in range(len(self.fog_nodes))]
        else:
            self.pref_lists = [np.asarray(p, dtype=np.int64) for p in self.preference]
        owner = np.zeros(sum(len(f.bandwidth_units) for f in self.fog_nodes), dtype=np.int64)
        for f in self.fog_nodes:
            owner[list(f.bandwidth_units)] = f.id
        self.bu_owner = owner

    def _reachable(self, f, radius=None):
        d_city = self.city_fog_dist[:, f]
        r = self.reach_radius if radius is None else np.full(len(self.cities), float(radius))
        ok_city = np.nonzero(d_city <= r)[0]
        ok_city = ok_city[self.consumers_per_city[ok_city] > 0]
        # consumer ids are contiguous per city, so (distance, id) order is (distance, city)
        ok_city = ok_city[np.lexsort((ok_city, d_city[ok_city]))]
        starts = np.concatenate([[0], np.cumsum(self.consumers_per_city)[:-1]])
        parts = [np.arange(starts[c], starts[c] + self.consumers_per_city[c]) for c in ok_city]
        return np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, np.int64)

    # convenience ---------------------------------------------------------

    @property
    def n_consumers(self):
        return int(self.consumers_per_city.sum())

    @property
    def n_fogs(self):
        return len(self.fog_nodes)

    @property
    def n_servers(self):
        return len(self.servers)

    @property
    def n_bus(self):
        return len(self.bu_owner)

    def consumer_fog_dist(self, consumers=None):
        idx = self.consumer_city if consumers is None else self.consumer_city[consumers]
        return self.city_fog_dist[idx]

    def home_fog(self):
        """Per consumer, the nearest FCN (ties to the lowest index)."""
        return np.argmin(self.city_fog_dist, axis=1)[self.consumer_city]

    def reach_matrix(self):
        """Dense BV_L matrix, consumers x fogs."""
        m = np.zeros((self.n_consumers, self.n_fogs), dtype=np.uint8)
        for f, lst in enumerate(self.pref_lists):
            m[lst, f] = 1
        return m

    # serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "schema_version": TOPOLOGY_SCHEMA,
            "params_hash": self.params_hash,
            "seed": self.seed,
            "hop_length_km": self.hop_length_km,
            "cities": [asdict(c) for c in self.cities],
            "fog_nodes": [asdict(f) for f in self.fog_nodes],
            "servers": [asdict(s) for s in self.servers],
            "consumers_per_city": [int(v) for v in self.consumers_per_city],
            "reach_radius": [float(v) for v in self.reach_radius],
            "hop_matrix": None if self.hop_matrix is None else np.asarray(self.hop_matrix).tolist(),
            "preference": None if self.preference is None
            else [[int(c) for c in p] for p in self.preference],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != TOPOLOGY_SCHEMA:
            raise ConfigError(f"unsupported topology schema {d.get('schema_version')}")
        cities = [City(c["id"], c["name"], c["population"], tuple(c["coord"])) for c in d["cities"]]
        fogs = [FogNode(**{**f, "bandwidth_units": tuple(f["bandwidth_units"])})
                for f in d["fog_nodes"]]
        servers = [CloudServer(**{**s, "coord": tuple(s["coord"]),
                                  "cpu_freq_range": tuple(s["cpu_freq_range"])})
                   for s in d["servers"]]
        return cls(cities, fogs, servers, np.array(d["consumers_per_city"]),
                   np.array(d["reach_radius"], dtype=float), d.get("params_hash", ""),
                   d.get("seed", 0), d.get("hop_length_km", 1000.0),
                   d.get("hop_matrix"), d.get("preference"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


def reachable_set(f, topo, radius=None):
    """Preference list of FCN ``f``: consumers within ``radius`` km.

    ``radius=None`` uses the per-city default radius stored in the topology.
    The ball is closed; ordering is by distance, then consumer index.
    """
    if not 0 <= f < topo.n_fogs:
        raise IndexError(f"fog {f} not in topology")
    if radius is None:
        return topo.pref_lists[f]
    return topo._reachable(f, radius)


def _tier(devices, params):
    for cap, mw in zip(params.device_tiers, params.tier_power_mw):
        if devices <= cap:
            return cap, mw
    return params.device_tiers[-1], params.tier_power_mw[-1]


def generate_topology(config: ScenarioParams, seed=0):
    """Build the city-clustered network described by ``config``."""
    cities_all = load_cities(config.cities_csv)
    n_fogs = min(config.n_fogs, len(cities_all))
    n_ccity = n_fogs if config.consumer_cities is None else config.consumer_cities
    n_cities = max(n_fogs, n_ccity)
    if n_fogs < 1:
        raise ConfigError("need at least one fog node")
    if n_cities > len(cities_all):
        raise ConfigError(f"requested {n_cities} cities, table has {len(cities_all)}")
    if config.n_servers > n_fogs:
        raise ConfigError("more cloud servers than fog nodes")
    cities = cities_all[:n_cities]

    weights = np.array([c.population for c in cities], dtype=float) * config.traffic_per_capita
    weights[n_ccity:] = 0.0
    consumers = apportion(weights, config.n_consumers)
    peak = apportion(weights, max(config.max_consumers, config.n_consumers))

    # default radius: distance to the k-th nearest FCN from each city
    city_xy = np.array([c.coord for c in cities])
    cf = distance_matrix(city_xy, city_xy[:n_fogs])
    if config.reach_radius_km is not None:
        radius = np.full(n_cities, float(config.reach_radius_km))
    else:
        k = min(config.reach_rank, n_fogs)
        radius = np.sort(cf, axis=1)[:, k - 1]

    server_xy = cluster_servers(cities[:n_ccity] if n_ccity >= config.n_servers else cities,
                                config.n_servers, seed,
                                config.kmeans_max_iter, config.kmeans_tol)
    fog_server = np.argmin(distance_matrix(city_xy[:n_fogs], server_xy), axis=1)

    fogs = []
    for f in range(n_fogs):
        load = peak[f] * config.arrival_rate
        pe = max(1, math.ceil(load / (config.fog_pe_rate * config.fog_target_util)))
        rate = pe * config.fog_pe_rate
        bus = tuple(range(f * config.bus_per_fog, (f + 1) * config.bus_per_fog))
        fogs.append(FogNode(
            id=f, city=f, bandwidth_units=bus, per_bu_rate=config.bu_rate,
            service_rate=rate, processing_elements=pe,
            physical_servers=config.fog_physical_servers,
            vm_cap_per_server=config.fog_vm_per_server,
            storage_cap=config.fog_storage_bytes, proc_cap=rate * config.scale_factor,
            energy_rate=config.fog_energy_w,
        ))

    servers = []
    for j, xy in enumerate(server_xy):
        devices = int(peak[:n_fogs][fog_server == j].sum())
        cap, mw = _tier(devices, config)
        per_machine = config.cloud_rate() * config.cloud_target_util
        servers.append(CloudServer(
            id=j, coord=xy, device_capacity=cap, power_draw=mw,
            machine_count_max=max(1, math.ceil(cap * config.arrival_rate / per_machine)),
            cpu_freq_range=tuple(config.cpu_freq_range),
        ))

    return Topology(cities, fogs, servers, consumers, radius,
                    config.config_hash(), int(seed), config.hop_length_km)
