import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splcmap.feature_model import (
    CrossTreeConstraint,
    Dependency,
    Feature,
    FeatureModel,
    FeatureModelError,
    Phase,
    Variability,
    count_products,
    features_dependent,
    parse_feature_model,
    serialize_feature_model,
    traversal_plan,
)

from .oracles import subset_enumeration_product_count

WACLINE_FIRST_LEVEL = """\
WACline
  !AnnotationServer
  !Target
  !Codebook
  !Purpose
  !Operation
  ?ImportExport
"""


def test_parse_first_level_markers():
    model = parse_feature_model(WACLINE_FIRST_LEVEL)
    assert model.spl_name == "WACline"
    mandatory = {f.name for f in model.features if f.variability is Variability.MANDATORY}
    optional = {f.name for f in model.features if f.variability is Variability.OPTIONAL}
    assert mandatory == {"AnnotationServer", "Target", "Codebook", "Purpose", "Operation"}
    assert optional == {"ImportExport"}
    assert all(f.level == 1 for f in model.features)


def test_parse_root_only():
    model = parse_feature_model("Solo\n")
    assert model.feature_count == 0
    assert traversal_plan(model).batches == ()


def test_parse_indentation_jump():
    text = "Root\n  !A\n      !TooDeep\n"
    with pytest.raises(FeatureModelError, match="indentation jump"):
        parse_feature_model(text)


def test_parse_duplicate_name():
    with pytest.raises(FeatureModelError, match="duplicate"):
        parse_feature_model("Root\n  !A\n  ?A\n")


def test_parse_single_member_group():
    with pytest.raises(FeatureModelError, match="single member"):
        parse_feature_model("Root\n  *Lonely\n")


def test_parse_group_run_broken_by_other_marker():
    text = "Root\n  *A\n  *B\n  !M\n  *C\n"
    with pytest.raises(FeatureModelError, match="single member"):
        parse_feature_model(text)


def test_parse_constraint_unknown_feature():
    with pytest.raises(FeatureModelError, match="unknown feature"):
        parse_feature_model("Root\n  !A\n---\nA requires Ghost\n")


def test_parse_comments_and_blank_lines_ignored():
    text = "# heading\nRoot\n\n  !A\n  # note\n  ?B\n"
    model = parse_feature_model(text)
    assert {f.name for f in model.features} == {"A", "B"}


def test_groups_assigned_to_consecutive_runs():
    text = "Root\n  ^A\n  ^B\n  !M\n  *C\n  *D\n"
    model = parse_feature_model(text)
    gids = {f.name: f.group_id for f in model.features}
    assert gids["A"] == gids["B"] is not None
    assert gids["C"] == gids["D"] is not None
    assert gids["A"] != gids["C"]
    assert gids["M"] is None


def test_traversal_plan_wacline_first_level():
    model = parse_feature_model(WACLINE_FIRST_LEVEL)
    plan = traversal_plan(model)
    assert [(b.level, b.phase, b.features) for b in plan.batches] == [
        (1, Phase.MANDATORY, ("AnnotationServer", "Codebook", "Operation", "Purpose", "Target")),
        (1, Phase.VARIABLE, ("ImportExport",)),
    ]


def test_traversal_plan_levels_and_phases():
    model = parse_feature_model("Root\n  !A\n    ?B\n")
    plan = traversal_plan(model)
    assert [(b.level, b.phase, b.features) for b in plan.batches] == [
        (1, Phase.MANDATORY, ("A",)),
        (2, Phase.VARIABLE, ("B",)),
    ]


def test_traversal_plan_is_permutation(mini_model):
    plan = traversal_plan(mini_model)
    planned = [name for b in plan.batches for name in b.features]
    assert sorted(planned) == sorted(f.name for f in mini_model.features)
    assert len(planned) == len(set(planned))


def test_count_two_optionals():
    assert count_products(parse_feature_model("Root\n  ?A\n  ?B\n")) == 4


def test_count_alternative_group_of_three():
    assert count_products(parse_feature_model("Root\n  ^A\n  ^B\n  ^C\n")) == 3


def test_count_requires_constraint():
    model = parse_feature_model("Root\n  ?A\n  ?B\n---\nA requires B\n")
    assert count_products(model) == 3


def test_count_excludes_constraint():
    model = parse_feature_model("Root\n  ?A\n  ?B\n---\nA excludes B\n")
    assert count_products(model) == 3


def test_count_or_group():
    assert count_products(parse_feature_model("Root\n  *A\n  *B\n")) == 3


def test_count_exceeds_cap():
    model = parse_feature_model("Root\n" + "".join(f"  ?F{i}\n" for i in range(8)))
    assert count_products(model, cap=100) is None
    assert count_products(model, cap=256) == 256


def test_count_root_only():
    assert count_products(parse_feature_model("Solo\n")) == 1


def test_dependent_constraint_and_ancestor():
    model = parse_feature_model("Root\n  !A\n    ?C\n  ?B\n---\nA requires B\n")
    assert features_dependent(model, "A", "B") is Dependency.DEPENDENT
    assert features_dependent(model, "A", "C") is Dependency.DEPENDENT
    assert features_dependent(model, "C", "B") is Dependency.DISCONNECTED


def test_dependent_unknown_feature():
    model = parse_feature_model("Root\n  !A\n")
    with pytest.raises(FeatureModelError, match="unknown feature"):
        features_dependent(model, "A", "Ghost")


def test_round_trip_serialization(mini_model):
    text = serialize_feature_model(mini_model)
    again = parse_feature_model(text)
    assert again == mini_model
    assert serialize_feature_model(again) == text


# -- randomized model generator shared with the acceptance suite --------------


def random_model(rng: random.Random, max_features: int = 20, max_constraints: int = 5) -> FeatureModel:
    """Random valid model; shapes stay parseable from their canonical text."""
    n = rng.randint(1, max_features - 1)
    names = [f"F{i}" for i in range(n)]
    features: list[Feature] = []
    levels = {"Root": 0}
    parents = ["Root"]
    parents_with_group: set[str] = set()
    i = 0
    while i < n:
        parent = rng.choice(parents)
        kind = rng.choice(["mandatory", "optional", "optional", "group"])
        if kind == "group" and i + 1 < n and parent not in parents_with_group:
            parents_with_group.add(parent)
            size = min(rng.randint(2, 3), n - i)
            variability = rng.choice([Variability.OR_MEMBER, Variability.ALT_MEMBER])
            group_kind = "or" if variability is Variability.OR_MEMBER else "alt"
            gid = f"{parent}/{group_kind}1"
            for _ in range(size):
                name = names[i]
                features.append(
                    Feature(name, parent, levels[parent] + 1, variability, group_id=gid)
                )
                levels[name] = levels[parent] + 1
                parents.append(name)
                i += 1
        else:
            name = names[i]
            variability = (
                Variability.MANDATORY if kind == "mandatory" else Variability.OPTIONAL
            )
            features.append(Feature(name, parent, levels[parent] + 1, variability))
            levels[name] = levels[parent] + 1
            parents.append(name)
            i += 1

    constraints = []
    seen_pairs = set()
    for _ in range(rng.randint(0, max_constraints)):
        if n < 2:
            break
        lhs, rhs = rng.sample(names, 2)
        if (lhs, rhs) in seen_pairs or (rhs, lhs) in seen_pairs:
            continue
        seen_pairs.add((lhs, rhs))
        constraints.append(CrossTreeConstraint(rng.choice(["requires", "excludes"]), lhs, rhs))
    root = Feature("Root", None, 0, Variability.MANDATORY)
    return FeatureModel("Root", root, tuple(features), tuple(constraints))


def test_count_products_matches_subset_oracle_randomized():
    rng = random.Random(20_240_901)
    for _ in range(40):
        model = random_model(rng, max_features=12, max_constraints=4)
        assert count_products(model, cap=1 << 22) == subset_enumeration_product_count(model)


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_features_dependent_symmetric(seed):
    model = random_model(random.Random(seed), max_features=10, max_constraints=4)
    names = [model.root.name] + [f.name for f in model.features]
    rng = random.Random(seed + 1)
    for _ in range(10):
        f1, f2 = rng.choice(names), rng.choice(names)
        assert features_dependent(model, f1, f2) == features_dependent(model, f2, f1)


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_random_model_round_trip(seed):
    # Serialisation orders features depth first, so compare structurally.
    model = random_model(random.Random(seed))
    reparsed = parse_feature_model(serialize_feature_model(model))
    assert frozenset(reparsed.features) == frozenset(model.features)
    assert reparsed.constraints == model.constraints
    assert reparsed.spl_name == model.spl_name
    assert serialize_feature_model(reparsed) == serialize_feature_model(model)
