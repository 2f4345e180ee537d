"""
ReconstructionResult — the output of either solver, and its on-disk form:
rho.bin (binary density matrix), manifest.json (run metadata), history.csv.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from tomokit.core.quantum import DensityMatrix
from tomokit.utils.io import fmt, read_json, read_matrix, write_csv, write_json, write_matrix

RHO_FILE = "rho.bin"
MANIFEST_FILE = "manifest.json"
HISTORY_FILE = "history.csv"


@dataclass(eq=False)
class ReconstructionResult:
    reconstructed_dm: DensityMatrix
    method: str
    loss_history: list = field(default_factory=list)
    fidelity_history: list = field(default_factory=list)
    disc_loss_history: list = field(default_factory=list)
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)
    best_epoch: int = 0
    converged_epoch: Optional[int] = None
    epochs_run: int = 0

    @property
    def final_fidelity(self):
        return self.fidelity_history[-1][1] if self.fidelity_history else None

    def manifest(self, include_timing=True):
        doc = {
            "method": self.method,
            "dim": self.reconstructed_dm.dim,
            "config": self.config,
            "best_epoch": self.best_epoch,
            "converged_epoch": self.converged_epoch,
            "epochs_run": self.epochs_run,
            "final_fidelity": self.final_fidelity,
            "purity": self.reconstructed_dm.purity(),
        }
        if include_timing:
            doc["wall_time"] = self.wall_time
        return doc


def history_rows(result):
    """(epoch, loss, fidelity) rows; fidelity is blank between records."""
    fidelities = dict(result.fidelity_history)
    rows = []
    for epoch, loss in result.loss_history:
        fid = fidelities.get(epoch)
        rows.append([epoch, fmt(loss), "" if fid is None else fmt(fid)])
    return rows


def save_result(result, out_dir):
    """Write rho.bin, manifest.json and history.csv into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_matrix(out_dir / RHO_FILE, result.reconstructed_dm.matrix)
    write_json(out_dir / MANIFEST_FILE, result.manifest())
    write_csv(out_dir / HISTORY_FILE, ["epoch", "loss", "fidelity"], history_rows(result))


def load_result_state(out_dir):
    """Density matrix and manifest of a saved result."""
    out_dir = Path(out_dir)
    return DensityMatrix(read_matrix(out_dir / RHO_FILE)), read_json(out_dir / MANIFEST_FILE)
