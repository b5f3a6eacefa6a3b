from taskreduce import check_reduction, rotation_decoder, rotation_encoder
from taskreduce.envs.gridworld import GridWorldParams, admissible_family, make_gridworld
from taskreduce.reduction import FunctionSpace


def main():
    east = make_gridworld(GridWorldParams(n=2, m=1, goal_dir="E"))
    north = make_gridworld(GridWorldParams(n=2, m=1, goal_dir="N"))
    family = admissible_family(north, random_count=64, seed=0)
    print("states:", east.states.size, "admissible north policies:", len(family))

    H = FunctionSpace.of([rotation_encoder(1)], domain=east.observations, codomain=north.observations)
    G = FunctionSpace.of([rotation_decoder(1)], domain=north.actions, codomain=east.actions)
    verdict = check_reduction(east, north, H, G, family)
    print("E reduces to N:", verdict.holds, "policies checked:", verdict.quantified)
    assert verdict.holds


if __name__ == "__main__":
    main()
