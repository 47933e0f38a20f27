"""Optional fine-tuning for the behavior classifier.

Trains the classifier head (and backbone) on a harmonized crop manifest.
Fixed recipe: batch 16, Adam at 3e-4 with betas (0.9, 0.999) and zero
weight decay, cross-entropy loss, 10 epochs, resize/normalize-only input
transforms. Not exercised by any acceptance test; it exists for users
who hold the aggregated dataset.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

BATCH_SIZE = 16
LEARNING_RATE = 3e-4
BETAS = (0.9, 0.999)
WEIGHT_DECAY = 0.0
EPOCHS = 10
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def _require_training_stack():
    try:
        import timm  # noqa: F401
        import torch  # noqa: F401
        import torchvision  # noqa: F401
    except ImportError as exc:
        raise SystemExit(
            f"fine-tuning needs torch, torchvision and timm ({exc}); "
            "install the 'real' extras"
        )


class CropDataset:
    """Person crops from a harmonized manifest (one box per record)."""

    def __init__(self, manifest_path):
        import torchvision.transforms as T
        from PIL import Image

        self._image = Image
        self.rows = [
            json.loads(line)
            for line in Path(manifest_path).read_text().splitlines()
            if line.strip()
        ]
        self.transform = T.Compose(
            [
                T.Resize((224, 224)),
                T.ToTensor(),
                T.Normalize(IMAGENET_MEAN, IMAGENET_STD),
            ]
        )

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, i):
        row = self.rows[i]
        with self._image.open(row["image_path"]) as im:
            crop = im.convert("RGB").crop(
                (round(row["x1"]), round(row["y1"]), round(row["x2"]), round(row["y2"]))
            )
        return self.transform(crop), int(row["label_id"])


def train(train_manifest, val_manifest, out_path, seed: int = 2024, epochs: int = EPOCHS):
    _require_training_stack()
    import timm
    import torch
    from torch.utils.data import DataLoader

    torch.manual_seed(seed)
    device = "cuda" if torch.cuda.is_available() else "cpu"
    model = timm.create_model("rexnet_150", pretrained=True, num_classes=2).to(device)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=LEARNING_RATE, betas=BETAS, weight_decay=WEIGHT_DECAY
    )
    loss_fn = torch.nn.CrossEntropyLoss()
    train_loader = DataLoader(
        CropDataset(train_manifest), batch_size=BATCH_SIZE, shuffle=True
    )
    val_loader = DataLoader(CropDataset(val_manifest), batch_size=BATCH_SIZE)

    best_f1 = -1.0
    for epoch in range(1, epochs + 1):
        model.train()
        running = 0.0
        for images, labels in train_loader:
            images, labels = images.to(device), labels.to(device)
            optimizer.zero_grad()
            loss = loss_fn(model(images), labels)
            loss.backward()
            optimizer.step()
            running += loss.item() * images.size(0)
        train_loss = running / len(train_loader.dataset)

        model.eval()
        tp = fp = fn = 0
        with torch.no_grad():
            for images, labels in val_loader:
                preds = model(images.to(device)).argmax(dim=1).cpu()
                tp += int(((preds == 1) & (labels == 1)).sum())
                fp += int(((preds == 1) & (labels == 0)).sum())
                fn += int(((preds == 0) & (labels == 1)).sum())
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        val_f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        print(f"epoch {epoch:02d}: train_loss {train_loss:.4f}  val_f1 {val_f1:.4f}")

        if val_f1 > best_f1:
            best_f1 = val_f1
            torch.save(model.state_dict(), out_path)
            print(f"  saved checkpoint (best val_f1 so far) -> {out_path}")
    return best_f1


def main(argv=None):
    parser = argparse.ArgumentParser(description="Fine-tune the behavior classifier.")
    parser.add_argument("--train", required=True, help="training crop manifest (.jsonl)")
    parser.add_argument("--val", required=True, help="validation crop manifest (.jsonl)")
    parser.add_argument("--out", required=True, help="checkpoint output path (.pt)")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--epochs", type=int, default=EPOCHS)
    args = parser.parse_args(argv)
    train(args.train, args.val, args.out, seed=args.seed, epochs=args.epochs)


if __name__ == "__main__":
    main()
