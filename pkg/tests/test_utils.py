from acgsolver.utils import Deadline, is_integral, json_number


def test_deadline():
    assert not Deadline.never().expired()
    assert Deadline(at=0.0).expired()
    assert Deadline.after_ms(60_000).sub(10).remaining() <= 0.010
    # a sub-deadline never outlives its parent
    assert Deadline(at=0.0).sub(60_000).expired()


def test_json_number():
    assert json_number(4.0) == 4 and isinstance(json_number(4.0), int)
    assert json_number(2.5) == 2.5
    assert json_number(float("inf")) is None
    assert is_integral(3.0000000001)
