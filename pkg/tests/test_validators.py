import pytest

from utils.validators import InputValidator, NetworkValidator, ParameterValidator, ValidationError


@pytest.mark.parametrize("name, valid", [
    ('v1', True),
    ('pipe-7.a_b', True),
    ('', False),
    ('   ', False),
    ('v 1', False),
    ('v#1', False),
])
def test_identifiers(name, valid):
    is_valid, error = NetworkValidator.validate_identifier(name)
    assert is_valid is valid
    assert (error is None) is valid


def test_edges():
    assert NetworkValidator.validate_edge('a', 'b', 1.0) == (True, None)
    assert not NetworkValidator.validate_edge('a', 'a', 1.0)[0]
    assert not NetworkValidator.validate_edge('a', 'b', 0.0)[0]
    assert not NetworkValidator.validate_edge('a', 'b', 'long')[0]
    assert not NetworkValidator.validate_length(float('inf'))[0]


def test_parameters():
    assert ParameterValidator.validate_positive('a', 2)[0]
    assert not ParameterValidator.validate_positive('a', 0.0)[0]
    assert not ParameterValidator.validate_positive('a', float('nan'))[0]
    assert ParameterValidator.validate_nonnegative('d', 0.0)[0]
    assert not ParameterValidator.validate_nonnegative('d', -1e-3)[0]
    assert ParameterValidator.validate_degree(3)[0]
    assert not ParameterValidator.validate_degree(0)[0]
    assert not ParameterValidator.validate_degree(True)[0]
    assert not ParameterValidator.validate_degree(2.0)[0]


def test_breakpoints():
    assert ParameterValidator.validate_breakpoints([0.0, 0.5, 1.0], 1.0)[0]
    assert not ParameterValidator.validate_breakpoints([0.0], 1.0)[0]
    assert not ParameterValidator.validate_breakpoints([0.0, 0.5, 0.5, 1.0], 1.0)[0]
    assert not ParameterValidator.validate_breakpoints([0.1, 1.0], 1.0)[0]
    assert not ParameterValidator.validate_breakpoints([0.0, 0.9], 1.0)[0]


def test_choices_and_switches():
    assert InputValidator.validate_choice(' Midpoint ', ['midpoint', 'backward_euler'])[0]
    assert not InputValidator.validate_choice('rk4', ['midpoint'])[0]
    assert not InputValidator.validate_choice('', ['midpoint'])[0]
    assert InputValidator.validate_on_off('ON') == (True, True, None)
    assert InputValidator.validate_on_off('off') == (True, False, None)
    assert not InputValidator.validate_on_off('maybe')[0]


def test_file_paths(tmp_path):
    path = tmp_path / 'net.txt'
    path.write_text('e1 a b 1\n', encoding='utf-8')
    assert InputValidator.validate_file_path(str(path)) == (True, None)
    assert not InputValidator.validate_file_path(str(tmp_path))[0]
    assert not InputValidator.validate_file_path(str(tmp_path / 'other.txt'))[0]
    assert not InputValidator.validate_file_path('')[0]


def test_validation_error_message():
    error = ValidationError('degree', '0', 'must be positive')
    assert str(error) == "Validation failed for 'degree': must be positive"
    assert error.field == 'degree'
