"""Regenerate the bundled natural test images under tests/data/.

Crops three 128x128 photographic patches from scikit-image's packaged
sample images and writes them as PNG.  Deterministic; rerun after
changing crops and commit the result.
"""

from pathlib import Path

import PIL.Image
import skimage.data

CROPS = {
    "natural_face.png": lambda: skimage.data.astronaut()[0:128, 160:288],
    "natural_fur.png": lambda: skimage.data.chelsea()[40:168, 120:248],
    "natural_table.png": lambda: skimage.data.coffee()[150:278, 0:128],
}


def main() -> None:
    out_dir = Path(__file__).resolve().parent.parent / "tests" / "data"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, crop in CROPS.items():
        path = out_dir / name
        PIL.Image.fromarray(crop()).save(path, "PNG")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
