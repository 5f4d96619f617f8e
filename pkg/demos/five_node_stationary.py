# Five agents, two communities: where do the regular agents end up on average?
import numpy as np

from gossip_blocks import expected_matrices, five_node_model, stationary_expectation, to_general
from gossip_blocks.simulator import initial_state, make_rng, run_time_average, sample_path

m = five_node_model()  # agents 0,1 | 2,3,4 ; agent 1 stubborn at 1.0, agent 4 stubborn at 0.0
m
net = to_general(m)
net.W  # w_s inside a community, w_d across

# expected one-step update, restricted to the regular agents
mats = expected_matrices(m)
np.round(mats.A_bar, 4)
mats.B_bar

st = stationary_expectation(m)
st.chi1, st.chi2  # 41/76 and 63/152
st.rho_A_bar

# one long trajectory: the time averages settle on the same values
x0 = initial_state(net, None, make_rng(1))
_, avg = run_time_average(net, x0, 10 ** 6, seed=1)
avg
np.abs(avg - st.x_r_star).max()

# the states themselves keep fluctuating between the two stubborn values
times, states = sample_path(net, x0, 2000, seed=1, every=250)
np.round(states, 3)

# equal stubborn states remove the gap between the communities
tied = stationary_expectation(five_node_model((0.5,), (0.5,)))
tied.chi1 - tied.chi2

if __name__ == "__main__":
    print("chi:", st.chi1, st.chi2)
    print("time average over 1e6 steps:", avg)
