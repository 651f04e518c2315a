"""Train the transform and the pooled-covariance classifier, then rank candidates.

Ten synthetic identities, 50 training and 20 test images each. Prints top-k
accuracy and the three best candidates for a few test images.

    python3 demos/classify_synthetic_faces.py
"""
import time

import numpy as np

from cuboid_pca import classifier, dataset, pipeline
from cuboid_pca.synthetic import face_like_images, split_per_class

images, labels = face_like_images(n_classes=10, per_class=70, noise=110.0, jitter=0.10, seed=4)
images = dataset.preprocess(images)
names = np.array([f"person{m}" for m in labels])
train, test = split_per_class(labels, 50)

for final in (5, 15, 45):
    spec = pipeline.setting3(final=final)
    t0 = time.perf_counter()
    model = pipeline.fit(images[train], spec)
    lda = classifier.fit_lda(pipeline.forward(model, images[train]), names[train])
    fit_s = time.perf_counter() - t0
    acc = classifier.topk_accuracy(lda, pipeline.forward(model, images[test]), names[test], ks=(1, 3, 5))
    print(f"K^P={final:3d}  D={spec.feature_dim:4d}  top1={acc[1]:.3f}  top3={acc[3]:.3f}  top5={acc[5]:.3f}  fit {fit_s:.2f}s")

feats = pipeline.forward(model, images[test][:4])
for truth, x in zip(names[test][:4], feats):
    cands = ", ".join(f"{lab} ({p:.2f})" for lab, p in classifier.top_k(lda, x, 3))
    print(f"{truth}: {cands}")

# doubling the training set with mirrored copies
mirrored = np.concatenate([images[train], images[train][:, :, ::-1]])
model = pipeline.fit(mirrored, spec)
lda = classifier.fit_lda(pipeline.forward(model, mirrored), np.concatenate([names[train]] * 2))
acc = classifier.topk_accuracy(lda, pipeline.forward(model, images[test]), names[test], ks=(1,))
print(f"with flips: top1={acc[1]:.3f}")
