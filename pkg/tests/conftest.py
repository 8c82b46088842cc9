import pytest

from drivestyle import ann
from drivestyle.records import (
    ClassScheme,
    Dataset,
    DrivingStyle,
    FeatureSet,
    Register,
)


def make_register(
    time_of_day=43200.0,
    latitude=39.36,
    longitude=-0.47,
    velocity=68.5,
    fax=0.1,
    fay=-0.05,
    faz=9.81,
    fgx=0.2,
    fgy=-0.3,
    fgz=1.5,
    label=None,
):
    return Register(time_of_day, latitude, longitude, velocity,
                    fax, fay, faz, fgx, fgy, fgz, label)


def velocity_dataset(specs, t0=36000.0):
    """Labeled dataset with one register per (velocity, label) pair."""
    regs = []
    for i, (v, label) in enumerate(specs):
        regs.append(make_register(time_of_day=t0 + i, velocity=v, label=label))
    return Dataset(tuple(regs), source="test")


SPEED_FEATURES = FeatureSet("speed_only", ("velocity", "fax"))


@pytest.fixture(scope="session")
def speed_net():
    """Tiny deterministic classifier: style from velocity thresholds.

    Trained once on clearly separated velocity bands (Con < 45, Nor 55-75,
    Agg > 85) so tests can craft traces whose predictions are known.
    """
    specs = []
    for i in range(60):
        specs.append((20.0 + (i % 10), DrivingStyle.CON))
        specs.append((60.0 + (i % 10), DrivingStyle.NOR))
        specs.append((90.0 + (i % 10), DrivingStyle.AGG))
    data = velocity_dataset(specs)
    net = ann.train(
        data, SPEED_FEATURES, ClassScheme.THREE_CLASS,
        cfg=ann.TrainConfig(learning_rate=0.7, epochs=150, seed=11),
    )
    # the fixture is only useful if the bands really are learned
    assert ann.predict(net, make_register(velocity=25.0)) is DrivingStyle.CON
    assert ann.predict(net, make_register(velocity=65.0)) is DrivingStyle.NOR
    assert ann.predict(net, make_register(velocity=95.0)) is DrivingStyle.AGG
    return net
