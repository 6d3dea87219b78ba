"""Scenario parameters: rates, probabilities, prices and power coefficients.

Units are SI plus USD throughout: seconds, bytes, bytes/s, watts, joules,
grams.  Field comments give the unit of each default.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Raised for parameter sets that violate a documented invariant."""


@dataclass(frozen=True)
class ScenarioParams:
    # topology generation
    n_consumers: int = 10_000
    max_consumers: int = 100_000            # capacity planning horizon for FCN sizing
    n_fogs: int = 100                       # one FCN per city, largest cities first
    consumer_cities: int | None = None      # cities hosting consumers (None: all FCN cities)
    n_servers: int = 8
    bus_per_fog: int = 64
    reach_rank: int = 5                     # reachability radius = distance to k-th nearest FCN
    reach_radius_km: float | None = None    # overrides reach_rank when set
    hop_length_km: float = 1000.0           # inter-fog hop count = 1 + floor(dist / hop_length)
    cities_csv: str | None = None           # None: bundled snapshot
    traffic_per_capita: float = 1.0         # relative traffic weight per consumer
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-9

    # time
    horizon: int = 3600                     # slots
    slot_seconds: float = 1.0

    # offloading probabilities
    pi_c: float = 0.0
    pi_f: float = 0.5
    pi_cs: float = 0.0

    # traffic
    arrival_rate: float = 1.0               # requests/s per consumer
    packet_bytes: float = 512.0             # mean request payload
    omega1_fraction: float = 0.0            # share of volume sent straight to cloud
    omega3_fraction: float = 0.0            # share of fog-uploaded volume also needing cloud
    interfog_payload: float | None = None   # bytes per request crossing fogs (None: packet_bytes)
    access_link_bps: float = 1e9
    interfog_link_bps: float = 10e9

    # fog nodes
    fog_pe_rate: float = 500.0              # requests/s per processing element
    fog_target_util: float = 0.7
    fog_physical_servers: int = 2
    fog_vm_per_server: int = 8
    fog_storage_bytes: float = 64e9
    fog_energy_w: float = 3.7
    fog_comp_energy: float = 1e-9           # J/byte
    fog_weight: float = 1.0                 # psi_f
    fog_power_coeffs: tuple = (1e-9, 1.0, 0.0)  # a [s/byte], b [1], c [bytes/s]
    app_storage_bytes: float = 1e9          # Q_a^s
    scale_factor: float = 1.0               # epsilon^a

    # cloud
    cloud_service_rate: float = 10.0        # requests/s per machine
    cloud_target_util: float = 0.7
    cpu_freq_ghz: float = 2.5
    cpu_freq_range: tuple = (1.0, 3.5)
    cycles_per_request: float | None = None  # K; when set, service rate = eta / K
    cloud_power_coeffs: tuple = (150.0, 1900.0, 3.0)  # A [W/GHz^Delta], B [W], Delta
    device_tiers: tuple = (16_000, 32_000, 64_000, 128_000)
    tier_power_mw: tuple = (9.7, 19.4, 38.7, 77.4)
    wan_delay_factor: float = 1e-7          # chi, s per (request/s)
    wan_propagation_kmps: float = 2e5

    # energy per byte
    tx_energy_af: float = 2e-7              # J/byte consumer -> fog
    tx_energy_ff: float = 1e-7              # J/byte fog -> fog
    tx_energy_fc: float = 2e-6              # J/byte fog -> cloud
    router_power_1g_w: float = 20.0
    router_power_10g_w: float = 40.0

    # prices
    alpha_comm: float = 1e-6                # USD per second of latency
    alpha_cons: float = 50.0 / 3.6e9        # USD/J (USD 50 per MWh)
    emission_price: float = 1e-3            # USD/g (USD 1000 per tonne)
    emission_rate: float = 475.0            # g/kWh
    pue: float = 1.58
    cloud_server_power: float = 9.7e6       # W, beta_c
    upload_tariff: float = 12.0             # USD per GB (see upload_tariff_per_byte)
    upload_tariff_per_byte: bool = False
    storage_price: float = 0.50             # USD per VM-hour
    router_price: float = 50.0              # USD per port-year
    server_price: float = 4000.0            # USD per server-year
    vm_price: float = 0.05                  # USD per VM-hour

    # QoS and constraint handling
    delay_limit: float = 1.0                # L^a, seconds
    big_m: float = 1e9
    stability_margin: float = 1e-6

    def __post_init__(self):
        for name in ("pi_c", "pi_f", "pi_cs", "omega1_fraction", "omega3_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")
        if self.omega1_fraction + self.omega3_fraction > 1.0:
            raise ConfigError("omega1_fraction + omega3_fraction must not exceed 1")
        a, _, _ = self.fog_power_coeffs
        if a <= 0:
            raise ConfigError("fog power coefficient a must be > 0 (strict convexity)")
        A, B, delta = self.cloud_power_coeffs
        if A < 0 or B < 0:
            raise ConfigError("cloud power coefficients A, B must be >= 0")
        if not 2.5 <= delta <= 3.0:
            raise ConfigError(f"cloud power exponent {delta} outside [2.5, 3]")
        if len(self.device_tiers) != len(self.tier_power_mw):
            raise ConfigError("device_tiers and tier_power_mw must pair up")
        if self.n_servers < 1:
            raise ConfigError("n_servers must be >= 1")
        if self.n_consumers < 0 or self.bus_per_fog < 1:
            raise ConfigError("n_consumers >= 0 and bus_per_fog >= 1 required")
        lo, hi = self.cpu_freq_range
        if not 0 < lo <= self.cpu_freq_ghz <= hi:
            raise ConfigError("cpu_freq_ghz must lie in cpu_freq_range")
        prices = ("alpha_comm", "alpha_cons", "emission_price", "upload_tariff",
                  "storage_price", "router_price", "server_price", "vm_price")
        for name in prices:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.arrival_rate < 0 or self.packet_bytes < 0:
            raise ConfigError("arrival_rate and packet_bytes must be >= 0")

    # derived quantities -------------------------------------------------

    @property
    def bu_rate(self):
        """Per-BU uplink rate delta in bytes/s."""
        return self.access_link_bps / 8.0 / self.bus_per_fog

    @property
    def interfog_rate(self):
        return self.interfog_link_bps / 8.0

    @property
    def payload(self):
        return self.packet_bytes if self.interfog_payload is None else self.interfog_payload

    @property
    def horizon_seconds(self):
        return self.horizon * self.slot_seconds

    @property
    def upload_tariff_usd_per_byte(self):
        if self.upload_tariff_per_byte:
            return self.upload_tariff
        return self.upload_tariff / 1e9

    def cloud_rate(self, freq_ghz=None):
        """Per-machine cloud service rate, optionally derived from eta / K."""
        if self.cycles_per_request is None:
            return self.cloud_service_rate
        eta = self.cpu_freq_ghz if freq_ghz is None else freq_ghz
        return eta * 1e9 / self.cycles_per_request

    def machine_power(self, freq_ghz=None):
        A, B, delta = self.cloud_power_coeffs
        eta = self.cpu_freq_ghz if freq_ghz is None else freq_ghz
        return A * eta ** delta + B

    # serialization ------------------------------------------------------

    def to_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema_version {version}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in data.items():
            if isinstance(value, list):
                data[key] = tuple(value)
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_(self, **changes):
        return replace(self, **changes)


def pilot_params(**overrides):
    """Pilot network used for the optimized-cost curves: 80 users, 50 FCNs, 5 BUs each."""
    base = dict(
        n_consumers=80,
        max_consumers=95,
        n_fogs=50,
        n_servers=8,
        bus_per_fog=5,
        reach_radius_km=2500.0,
        fog_pe_rate=20.0,
        cloud_service_rate=10.0,
        vm_price=0.05,
        alpha_comm=1e-3,
        fog_physical_servers=1,
        fog_vm_per_server=4,
        cycles_per_request=2.5e8,
    )
    base.update(overrides)
    return ScenarioParams(**base)


__all__ = ["ScenarioParams", "ConfigError", "SCHEMA_VERSION", "pilot_params"]
