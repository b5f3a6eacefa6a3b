from taskreduce import ArchSpec, EstimatorConfig, FunctionSpace, estimate, exact_relative_complexity
from taskreduce.envs import toy
from taskreduce.taskcore import enumerate_admissible


def main():
    tau1, tau2 = toy.oracle_pair()
    H = FunctionSpace.identity(tau1.observations, "encoder")
    G = FunctionSpace.identity(tau2.actions, "decoder")
    exact = exact_relative_complexity(tau1, tau2, H, G, enumerate_admissible(tau2))
    print("exact C:", exact.value)

    config = EstimatorConfig(alpha=1.0, lr_policy=0.01, lr_enc_dec=0.01, lr_critic=0.01, max_iters=2000, seed=0)
    est = estimate(tau1, tau2, ArchSpec(None), ArchSpec(None), ArchSpec(1, 16), config)
    print("estimated C:", est.value, "inner admissible:", est.inner_admissible)
    print("abs error:", abs(est.value - exact.value))


if __name__ == "__main__":
    main()
