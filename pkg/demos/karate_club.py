# Zachary's karate club, with members 1 and 34 held fixed at 1 and 0.
import numpy as np

from gossip_blocks import load_karate, run_karate
from gossip_blocks.harness import run_seeds

data = load_karate()
np.bincount(data.truth)[1:]  # 17 / 17
data.anchors  # stubborn -> known neighbour on the same side (0-based)

runs = run_seeds(lambda s: run_karate(s, steps=10 ** 6, log_every=10 ** 4), range(10))
final = [r.extra["final_accuracy"] for r in runs]
final  # 33/34: member 9 sits on the other side of the threshold

# member 9 (index 8) has more ties to 34's group than its own
wrong = [np.flatnonzero(r.detector.labels != data.truth) for r in runs[:1]]
wrong

# a few seeds hit the exact split on the way
[s for s, r in enumerate(runs) if r.first_correct >= 0]

# the block-model weight estimates have no true value here
runs[0].detector.w_s_hat, runs[0].detector.w_d_hat

if __name__ == "__main__":
    print("final accuracy per seed:", final)
    print("median:", np.median(final))
