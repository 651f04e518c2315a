"""Compress one image to a handful of coefficients and rebuild it.

Fits Setting-3 kernels (8x8, then 4x4, then 2x2 blocks) on synthetic
face-like images, then compares reconstructions at several final sizes.
Writes PNGs next to this script under ``out/``.

    python3 demos/compress_and_reconstruct.py
"""
from pathlib import Path

import numpy as np

from cuboid_pca import dataset, pipeline, reconstruction
from cuboid_pca.synthetic import face_like_images

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

images, labels = face_like_images(n_classes=10, per_class=40, seed=0)
images = dataset.preprocess(images)
probe = images[-1]
train = images[:-1]
dataset.save_image(out / "original.png", probe)

print("final  ratio    deviation%  (raw, before equalization)")
for final in (10, 30, 90, 256):
    spec = pipeline.setting3(final=final)
    model = pipeline.fit(train, spec)
    rec = reconstruction.compress(model, probe)
    raw = reconstruction.decompress(model, rec, postprocess=False)
    shown = reconstruction.decompress(model, rec)
    dev = np.mean([reconstruction.percent_deviation(probe[..., c], raw[..., c]) for c in range(3)])
    print(f"{final:5d}  {reconstruction.compression_ratio(spec):7.2f}  {dev:10.4f}")
    dataset.save_image(out / f"recovered_{final}.png", shown)

# with every eigenvector kept the transform is an orthonormal change of basis
full = pipeline.fit(train, pipeline.full_rank(pipeline.setting3()))
back = pipeline.inverse(full, pipeline.forward(full, probe))
print("full rank, max abs pixel error:", np.abs(back - probe).max())
