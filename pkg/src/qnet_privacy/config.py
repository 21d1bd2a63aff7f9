"""Numerical tolerances shared by the library, the tests and the CLI."""

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10          # max |M - M^dagger| entry
    trace: float = 1e-10
    psd: float = 1e-10           # most negative eigenvalue allowed
    unitary: float = 1e-9
    kraus: float = 1e-9          # completeness of sum A^dagger A
    povm: float = 1e-9
    fisher_sym: float = 1e-9
    fisher_psd: float = 1e-9
    drho_herm: float = 1e-8
    rank_rel: float = 1e-10      # SLD support cut, relative to max eigenvalue
    qfim_alt: float = 1e-7       # agreement of the two QFIm formulas
    p_floor: float = 1e-12       # outcomes below this probability are skipped
    crb_cut: float = 1e-10       # pseudo-inverse cut, relative
    cfim_order: float = 1e-8     # Q - F eigenvalue tolerance
    privacy: float = 1e-8
    commute: float = 1e-10
    structure_zero: float = 1e-12
    fd_step: float = 1e-5

    def as_dict(self):
        return asdict(self)

    def updated(self, **changes):
        return replace(self, **changes)


DEFAULT_TOL = Tolerances()
