"""Chronological training record, exportable as JSON Lines."""

from dataclasses import dataclass, field

from ..utils import write_jsonl


@dataclass
class TrainHistory:
    mode: str
    events: list = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = "max_epochs"

    def record_iteration(self, epoch, iteration, losses, phase=None):
        rec = {"event": "iteration", "epoch": epoch, "iter": iteration}
        if phase is not None:
            rec["phase"] = phase
        rec.update(losses)
        self.events.append(rec)

    def record_epoch(self, epoch, val_dice_loss, val_dice_loss_sge, best_epoch):
        self.events.append({
            "event": "epoch",
            "epoch": epoch,
            "val_dice_loss": val_dice_loss,
            "val_dice_loss_sge": val_dice_loss_sge,
            "best_epoch": best_epoch,
        })

    def iterations(self):
        return [e for e in self.events if e["event"] == "iteration"]

    def epochs(self):
        return [e for e in self.events if e["event"] == "epoch"]

    def validation_losses(self, sge=False):
        key = "val_dice_loss_sge" if sge else "val_dice_loss"
        return [e[key] for e in self.epochs()]

    def write_jsonl(self, path):
        summary = {
            "event": "summary",
            "mode": self.mode,
            "best_epoch": self.best_epoch,
            "stop_reason": self.stop_reason,
        }
        write_jsonl(path, self.events + [summary])
