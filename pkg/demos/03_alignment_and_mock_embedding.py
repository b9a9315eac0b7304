# %% [markdown]
# From detection box to embedding
#
# Expand a detector box by the default margin, clamp it to the canvas,
# resample to 160x160 and run the deterministic stand-in embedder.

# %%
import numpy as np

from atelier.align import BBox, Detection, align_face, expand_and_clamp
from atelier.embed import mock_embed, read_store, write_store
from atelier.embed import Embeddings

rng = np.random.default_rng(0)
canvas = rng.integers(0, 256, size=(400, 300, 3), dtype=np.uint8)

# %% a box near the corner gets clipped on two sides
box = BBox(5, 10, 85, 120)
print(box.as_tuple(), "->", expand_and_clamp(box, img_w=300, img_h=400).as_tuple())

# %%
face = align_face(canvas, Detection("canvas", 0, box))
print(face.face_id, face.crop.shape, face.crop.dtype)

# %% left-dark / right-bright image: half the blocks negative, half positive
split = np.zeros((160, 160), np.uint8)
split[:, 80:] = 255
v = mock_embed(split)
print("norm", round(float(np.linalg.norm(v)), 6), "signs", np.sign(v[:64]).sum(), np.sign(v[64:]).sum())

# %% the binary store round-trips bit for bit
emb = Embeddings((face.face_id, "split__0"), np.stack([mock_embed(face.crop), v]))
blob = write_store(emb)
back = read_store(blob)
print(len(blob), "bytes;", np.array_equal(back.vectors, emb.vectors), back.ids)
