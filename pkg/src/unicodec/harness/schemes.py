"""Code-decoder schemes driven by the simulator.

A scheme turns a descriptor into a transmit/decode chain and runs a batch of
frames at a given noise level.  Each scheme declares whether its decoder is
symmetric, which is what allows the all-zero-codeword shortcut.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ConstructionError, DomainError, SeedSpec, bpsk_awgn_llr
from ..ldpc.decode import BpConfig, decode_bp
from ..ldpc.matrix import LdpcCode, dvbs2_code, load_alist, make_encoder, nr5g_bg2_code
from ..outer import BchSpec, CrcSpec, bch_decode_batch, bch_encode, dvbs2_bch
from ..polar.construct import (LengthMatch, PolarCodeSpec, apply_length_match,
                               construct_aed_code, construct_polar, load_spec,
                               nr5g_sequence, polar_encode, rate_match)
from ..polar.decode import (decode_aed, decode_sc, decode_scl, decode_ssc,
                            sample_automorphisms)
from ..sc_ldpc import (CoupledChain, WindowConfig, build_coupled_chain, decode_windowed,
                       load_chain, regular_base)
from .config import ConfigError, SchemeDescriptor

#: DVB-S2 normal-frame BCH correction capability per LDPC rate.
DVBS2_BCH_T = {"1_2": 12, "8_9": 8}


@dataclass
class FrameStats:
    """Per-frame outcome of a batch."""

    frame_errors: np.ndarray  # bool
    bit_errors: np.ndarray  # int
    iterations: np.ndarray | None = None


class Scheme:
    """Base class: ``payload_bits`` information bits per frame over ``n_tx`` channel uses."""

    label: str
    payload_bits: int
    n_tx: int
    symmetric: bool
    decode_batch: int = 1000
    default_chunk: int = 1000

    def __init__(self, desc: SchemeDescriptor):
        self.desc = desc
        if desc.all_zero and not self.symmetric:
            raise ConfigError(f"all-zero transmission not allowed for {self.label!r}: "
                              "decoder symmetry is not declared")
        self.all_zero = self.symmetric if desc.all_zero is None else bool(desc.all_zero)

    @property
    def rate(self) -> float:
        """Rate used for the Eb/N0 to noise conversion."""
        return self.desc.rate if self.desc.rate is not None else self.payload_bits / self.n_tx

    @property
    def block(self) -> tuple[int, int]:
        """``(n, k)`` for the finite-length bound."""
        return self.n_tx, self.payload_bits

    def run(self, rng: np.random.Generator, sigma: float, frames: int) -> FrameStats:
        parts = []
        for start in range(0, frames, self.decode_batch):
            parts.append(self._run(rng, sigma, min(self.decode_batch, frames - start)))
        if not parts:
            return FrameStats(np.zeros(0, bool), np.zeros(0, np.int64))
        its = None if parts[0].iterations is None else np.concatenate([p.iterations for p in parts])
        return FrameStats(np.concatenate([p.frame_errors for p in parts]),
                          np.concatenate([p.bit_errors for p in parts]), its)

    def _messages(self, rng, frames: int) -> np.ndarray:
        if self.all_zero:
            return np.zeros((frames, self.payload_bits), dtype=np.uint8)
        return rng.integers(0, 2, (frames, self.payload_bits), dtype=np.uint8)

    def _run(self, rng, sigma, frames) -> FrameStats:
        raise NotImplementedError


def _stats(decoded, reference, iterations=None) -> FrameStats:
    be = np.count_nonzero(decoded != reference, axis=1)
    return FrameStats(be > 0, be.astype(np.int64), iterations)


# ---------------------------------------------------------------------------
# Polar


def polar_spec_from_descriptor(code: dict) -> PolarCodeSpec:
    if "spec_file" in code:
        extra = set(code) - {"spec_file"}
        if extra:
            raise ConfigError(f"spec_file excludes other code keys: {sorted(extra)}")
        try:
            return load_spec(code["spec_file"])
        except OSError as e:
            raise ConfigError(f"cannot read code spec {code['spec_file']}: {e.strerror}") from None
    try:
        N, K = int(code["N"]), int(code["K"])
    except KeyError as e:
        raise ConfigError(f"polar code needs {e.args[0]!r}") from None
    kind = code.get("construction", "ga")
    crc = CrcSpec.from_full(int(code["crc"], 16)) if code.get("crc") else None
    lm = LengthMatch(**code["length_match"]) if code.get("length_match") else None
    if kind == "ga":
        return construct_polar(N, K, design_snr_db=code.get("design_snr_db"),
                               target_fer=code.get("target_fer", 1e-6), crc=crc, length_match=lm)
    if kind == "5g":
        return construct_polar(N, K, crc=crc, length_match=lm, sequence=nr5g_sequence())
    if kind == "aed":
        if crc is not None or lm is not None:
            raise ConfigError("aed construction supports neither CRC nor length matching")
        if not code.get("i_min"):
            raise ConfigError("aed construction needs i_min")
        return construct_aed_code(N, K, code["i_min"], code.get("design_snr_db"),
                                  code.get("target_fer", 1e-6))
    raise ConfigError(f"unknown polar construction {kind!r}")


class PolarScheme(Scheme):
    def __init__(self, desc: SchemeDescriptor):
        self.spec = polar_spec_from_descriptor(desc.code)
        d = dict(desc.decoder)
        self.kind = d.get("kind", "sc")
        if self.kind not in ("sc", "ssc", "scl", "aed"):
            raise ConfigError(f"unknown polar decoder {self.kind!r}")
        self.list_size = int(d.get("list_size", 8))
        self.ensemble_size = int(d.get("ensemble_size", 8))
        self.kernel = d.get("kernel", "minsum")
        if self.kernel not in ("minsum", "exact") or (self.kind == "ssc" and self.kernel != "minsum"):
            raise ConfigError(f"kernel {self.kernel!r} not available for {self.kind}")
        self.label = desc.label or f"Polar {self.kind.upper()}"
        self.payload_bits = self.spec.message_length
        self.n_tx = self.spec.transmitted_length
        # SC-type decoders are symmetric; list selection and CRC checks are not proven so
        self.symmetric = self.kind in ("sc", "ssc") and self.spec.crc is None
        if self.kind == "aed":
            try:
                self.perms = sample_automorphisms(
                    self.spec, self.ensemble_size, SeedSpec(int(d.get("perm_seed", 0))))
            except ConstructionError as e:
                raise ConfigError(str(e)) from None
        work = {"sc": 1, "ssc": 1, "scl": self.list_size, "aed": self.ensemble_size}[self.kind]
        self.decode_batch = max(1, min(4096, 2 ** 21 // (self.spec.N * work)))
        self.default_chunk = max(self.decode_batch, 1000 if self.spec.N <= 1024 else 100)
        super().__init__(desc)

    def decode(self, llr):
        if self.kind == "sc":
            return decode_sc(self.spec, llr, self.kernel)
        if self.kind == "ssc":
            return decode_ssc(self.spec, llr)
        if self.kind == "scl":
            return decode_scl(self.spec, llr, self.list_size, self.kernel)
        return decode_aed(self.spec, llr, self.ensemble_size, SeedSpec(), self.perms)

    def _run(self, rng, sigma, frames):
        msg = self._messages(rng, frames)
        if self.all_zero:
            tx = np.zeros((frames, self.n_tx), dtype=np.uint8)
        else:
            tx = rate_match(self.spec, polar_encode(self.spec, msg))
        llr = apply_length_match(self.spec, bpsk_awgn_llr(tx, sigma, rng))
        out = self.decode(llr)
        return _stats(out.message, msg)


# ---------------------------------------------------------------------------
# LDPC


def ldpc_code_from_descriptor(code: dict) -> tuple[LdpcCode, BchSpec | None]:
    std = code.get("standard")
    if "alist" in code:
        extra = set(code) - {"alist"}
        if extra:
            raise ConfigError(f"alist excludes other code keys: {sorted(extra)}")
        try:
            H = load_alist(code["alist"])
        except OSError as e:
            raise ConfigError(f"cannot read alist {code['alist']}: {e.strerror}") from None
        enc = make_encoder(H)
        return LdpcCode(f"alist {code['alist']}", H, enc.info_pos, np.arange(H.N), encoder=enc), None
    if std == "5g_bg2":
        return nr5g_bg2_code(int(code.get("K", 128)), int(code.get("E", 256))), None
    if std == "dvbs2":
        rate = code.get("rate", "1_2")
        if rate not in DVBS2_BCH_T:
            raise ConfigError(f"unsupported DVB-S2 rate {rate!r}")
        ldpc = dvbs2_code(rate)
        bch = None
        if code.get("bch_t"):
            bch = dvbs2_bch(ldpc.k, int(code["bch_t"]))
        return ldpc, bch
    raise ConfigError(f"unknown LDPC code {std!r}")


class LdpcScheme(Scheme):
    decode_batch = 50

    def __init__(self, desc: SchemeDescriptor):
        self.code, self.bch = ldpc_code_from_descriptor(desc.code)
        try:
            self.cfg = BpConfig(**desc.decoder)
        except DomainError as e:
            raise ConfigError(str(e)) from None
        tag = "LBP" if self.cfg.schedule == "layered" else "BP"
        self.label = desc.label or f"{self.code.name} {tag}-{self.cfg.max_iterations}"
        self.payload_bits = self.bch.k if self.bch else self.code.k
        self.n_tx = self.code.n
        self.symmetric = self.bch is None
        self.decode_batch = max(1, min(2000, 2 ** 22 // max(self.code.H.n_edges, 1)))
        self.default_chunk = max(self.decode_batch, 200 if self.code.n > 10000 else 2000)
        super().__init__(desc)

    def _run(self, rng, sigma, frames):
        msg = self._messages(rng, frames)
        if self.all_zero:
            tx = np.zeros((frames, self.n_tx), dtype=np.uint8)
        else:
            inner = bch_encode(msg, self.bch) if self.bch else msg
            tx = self.code.encode(inner)
        llr = self.code.receive(bpsk_awgn_llr(tx, sigma, rng))
        out = decode_bp(self.code.H, llr, self.cfg)
        dec = out.codeword[:, self.code.message_pos]
        if self.bch:
            dec, _ = bch_decode_batch(dec, self.bch)
            dec = dec[:, :self.bch.k]
        return _stats(dec, msg, out.iterations)


# ---------------------------------------------------------------------------
# SC-LDPC


def chain_from_descriptor(code: dict) -> CoupledChain:
    if "chain_file" in code:
        extra = set(code) - {"chain_file"}
        if extra:
            raise ConfigError(f"chain_file excludes other code keys: {sorted(extra)}")
        try:
            return load_chain(code["chain_file"])
        except OSError as e:
            raise ConfigError(f"cannot read chain {code['chain_file']}: {e.strerror}") from None
    base = regular_base(int(code.get("dv", 4)), int(code.get("dc", 8)))
    return build_coupled_chain(base, w=int(code.get("w", 3)), L_chain=int(code.get("L_chain", 10)),
                               Z=int(code.get("Z", 800)), seed=int(code.get("seed", 0)))


class ScLdpcScheme(Scheme):
    """Chain transmitted as a whole; rate for Eb/N0 is the protograph design rate.

    Only the all-zero codeword is supported (BP is symmetric and the chain has
    no practical systematic encoder at these sizes); errors are counted over
    all code bits.
    """

    symmetric = True

    def __init__(self, desc: SchemeDescriptor):
        try:
            self.chain = chain_from_descriptor(desc.code)
            self.wcfg = WindowConfig(**desc.decoder)
        except (DomainError, ConstructionError) as e:
            raise ConfigError(str(e)) from None
        if desc.all_zero is False:
            raise ConfigError("SC-LDPC schemes simulate the all-zero codeword only")
        self.label = desc.label or f"SC-LDPC WBP-{self.wcfg.window_size}"
        self.payload_bits = self.chain.H.N
        self.n_tx = self.chain.H.N
        self.decode_batch = max(1, min(1000, 2 ** 21 // self.chain.H.n_edges))
        self.default_chunk = max(self.decode_batch, 20)
        super().__init__(desc)

    @property
    def rate(self) -> float:
        return self.desc.rate if self.desc.rate is not None else self.chain.design_rate

    @property
    def block(self) -> tuple[int, int]:
        n = self.chain.L * self.chain.n_position
        return n, int(round(n * self.chain.design_rate))

    def _run(self, rng, sigma, frames):
        zero = np.zeros((frames, self.n_tx), dtype=np.uint8)
        out = decode_windowed(self.chain, bpsk_awgn_llr(zero, sigma, rng), self.wcfg)
        return _stats(out.codeword, zero)


_FAMILIES = {"polar": PolarScheme, "ldpc": LdpcScheme, "sc_ldpc": ScLdpcScheme}


def build_scheme(desc: SchemeDescriptor) -> Scheme:
    """Resolve a descriptor; all failures surface as :class:`ConfigError`."""
    try:
        return _FAMILIES[desc.family](desc)
    except (DomainError, ConstructionError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"cannot build scheme: {e}") from None
