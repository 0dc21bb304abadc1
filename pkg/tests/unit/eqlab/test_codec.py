# Standard Library
import csv
import json

# Third Party
import numpy as np
import pytest

# Local
from eqlab.matrixkit import SIGMA_Y
from eqlab.exceptions import ConfigError, InvalidPovm
from eqlab.distinguish import POVM
from eqlab.codec import (
    load_json,
    read_json,
    dump_json,
    encode_povm,
    decode_povm,
    decode_state,
    to_json_text,
    decode_matrix,
    decode_complex,
    encode_complex,
    decode_partition,
    write_series_csv,
    decode_hamiltonian,
    decode_measurements,
)

Z_POVM = {
    "label": "z",
    "outcomes": [
        {"result": "0", "matrix": [[1, 0], [0, 0]]},
        {"result": "1", "matrix": [[0, 0], [0, 1]]},
    ],
}


class TestComplexArrays:
    """Test suite for the [re, im] encoding."""

    def test_encode_pauli_y(self):
        """Test that every entry of sigma_y becomes an [re, im] pair."""
        assert encode_complex(SIGMA_Y) == [
            [[0.0, 0.0], [0.0, -1.0]],
            [[0.0, 1.0], [0.0, 0.0]],
        ]

    def test_decode_accepts_plain_reals(self):
        """Test that real nested lists decode as complex matrices."""
        # Act
        M = decode_complex([[1, 2], [3, 4]], "matrix", 2)

        # Assert
        assert M.dtype == np.complex128
        np.testing.assert_array_equal(M, [[1, 2], [3, 4]])

    def test_decode_pairs(self):
        """Test that decoding inverts the pair encoding."""
        np.testing.assert_array_equal(
            decode_complex(encode_complex(SIGMA_Y), "matrix", 2), SIGMA_Y
        )

    @pytest.mark.parametrize(
        "data",
        [[1, 2, 3], [["a", "b"], ["c", "d"]], [[[1, 2, 3]]]],
    )
    def test_decode_rejects_bad_shapes(self, data):
        """Test that wrong shapes name the offending field."""
        with pytest.raises(ConfigError) as excinfo:
            decode_complex(data, "hamiltonian.matrix", 2)
        assert excinfo.value.field == "hamiltonian.matrix"

    def test_non_square_matrix(self):
        """Test that a rectangular matrix is rejected."""
        with pytest.raises(ConfigError):
            decode_matrix([[1, 2, 3], [4, 5, 6]], "matrix")


class TestJsonFiles:
    """Test suite for JSON reading and canonical writing."""

    def test_canonical_text(self):
        """Test sorted keys, numpy scalars and non-finite floats."""
        # Act
        text = to_json_text(
            {
                "b": np.float64(0.5),
                "a": [np.int64(3), np.bool_(True)],
                "z": 1.0 + 2.0j,
                "inf": float("inf"),
            }
        )

        # Assert
        assert text.endswith("\n")
        assert json.loads(text) == {
            "a": [3, True],
            "b": 0.5,
            "inf": "inf",
            "z": [1.0, 2.0],
        }
        assert text.index('"a"') < text.index('"b"')

    def test_round_trip_through_disk(self, tmp_path):
        """Test that a dumped report loads back with parents created."""
        # Arrange
        path = tmp_path / "nested" / "report.json"

        # Act
        dump_json({"x": np.arange(3)}, path)

        # Assert
        assert load_json(path) == {"x": [0, 1, 2]}

    def test_missing_file(self, tmp_path):
        """Test that a missing file is a ConfigError on the given field."""
        with pytest.raises(ConfigError) as excinfo:
            load_json(tmp_path / "absent.json", field="hamiltonian.file")
        assert excinfo.value.field == "hamiltonian.file"

    @pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
    def test_invalid_content(self, tmp_path, content):
        """Test that broken JSON and non-objects are rejected."""
        # Arrange
        path = tmp_path / "bad.json"
        path.write_text(content)

        # Act / Assert
        with pytest.raises(ConfigError):
            load_json(path)

    def test_read_json_accepts_lists(self, tmp_path):
        """Test that read_json returns any JSON value."""
        # Arrange
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")

        # Act
        result = read_json(path)

        # Assert
        assert result == [1, 2]


class TestDecoders:
    """Test suite for object decoders."""

    def test_hamiltonian_from_matrix(self):
        """Test that a matrix section is diagonalized."""
        H = decode_hamiltonian({"matrix": [[1, 0], [0, -1]]}, "hamiltonian")
        np.testing.assert_allclose(H.energies, [-1.0, 1.0])

    def test_hamiltonian_from_eigendecomposition(self):
        """Test that energies and eigenvectors are taken as given."""
        # Act
        H = decode_hamiltonian(
            {"energies": [2.0, 0.0], "eigenvectors": [[1, 0], [0, 1]]},
            "hamiltonian",
        )

        # Assert
        np.testing.assert_allclose(H.energies, [0.0, 2.0])

    def test_non_hermitian_hamiltonian(self):
        """Test that a non-Hermitian matrix is a ConfigError."""
        with pytest.raises(ConfigError) as excinfo:
            decode_hamiltonian({"matrix": [[0, 1], [0, 0]]}, "hamiltonian")
        assert excinfo.value.field == "hamiltonian"

    def test_hamiltonian_needs_content(self):
        """Test that a section with no matrix is rejected."""
        with pytest.raises(ConfigError):
            decode_hamiltonian({"delta_deg": 1e-6}, "hamiltonian")

    def test_state_vector_and_matrix(self):
        """Test that both state encodings decode."""
        # Act
        pure = decode_state({"vector": [[0.6, 0], [0, 0.8]]}, "state")
        mixed = decode_state({"matrix": [[0.5, 0], [0, 0.5]]}, "state")

        # Assert
        assert pure.is_pure
        np.testing.assert_allclose(pure.vector, [0.6, 0.8j])
        assert mixed.purity() == pytest.approx(0.5)

    def test_invalid_state(self):
        """Test that an unnormalized vector is rejected."""
        with pytest.raises(ConfigError):
            decode_state({"vector": [1, 1]}, "state")

    def test_povm_round_trip(self):
        """Test that an encoded POVM decodes to the same operators."""
        # Arrange
        P = POVM.projective(np.eye(2), label="z")

        # Act
        encoded = encode_povm(P)
        decoded = decode_povm(encoded, "measurements.povms[0]")

        # Assert
        assert set(encoded["outcomes"][0]) == {"result", "matrix"}
        assert decoded.label == "z"
        assert decoded.results == ("0", "1")
        np.testing.assert_array_equal(decoded.operators, P.operators)

    def test_povm_file_shape(self):
        """Test the {label, outcomes: [{result, matrix}]} layout."""
        # Act
        P = decode_povm(Z_POVM, "measurements.file")

        # Assert
        assert P.label == "z"
        assert P.results == ("0", "1")
        np.testing.assert_array_equal(P.operators[1], [[0, 0], [0, 1]])

    def test_invalid_povm(self):
        """Test that a POVM not summing to identity is refused."""
        # Arrange
        povm = {
            "label": "half",
            "outcomes": [{"matrix": [[0.5, 0], [0, 0.5]]}],
        }

        # Act
        with pytest.raises(InvalidPovm) as excinfo:
            decode_povm(povm, "measurements.povms[0]")

        # Assert
        assert excinfo.value.label == "half"

    @pytest.mark.parametrize(
        "povm, field",
        [
            ([1, 2], "m"),
            ({"label": "x"}, "m.outcomes"),
            ({"outcomes": []}, "m.outcomes"),
            ({"outcomes": [{"operator": [[1, 0], [0, 1]]}]}, "m.outcomes[0]"),
            (
                {
                    "outcomes": [
                        {"matrix": [[1]]},
                        {"matrix": [[1, 0], [0, 1]]},
                    ]
                },
                "m.outcomes",
            ),
        ],
    )
    def test_malformed_povm(self, povm, field):
        """Test that structural problems are ConfigErrors, not KeyErrors."""
        # Act
        with pytest.raises(ConfigError) as excinfo:
            decode_povm(povm, "m")

        # Assert
        assert excinfo.value.field == field

    @pytest.mark.parametrize(
        "data, n_povms",
        [
            (Z_POVM, 1),
            ([Z_POVM, Z_POVM], 2),
            ({"povms": [Z_POVM]}, 1),
        ],
    )
    def test_measurement_set_layouts(self, data, n_povms):
        """Test one POVM, a list of POVMs and a povms wrapper."""
        # Act
        M = decode_measurements(data, "measurements.file")

        # Assert
        assert len(M.measurements) == n_povms
        assert M.n_outcomes == 2 * n_povms

    @pytest.mark.parametrize("data", [[], {"povms": []}, 3, {"povms": 3}])
    def test_empty_measurement_set(self, data):
        """Test that empty or scalar measurement data is refused."""
        with pytest.raises(ConfigError):
            decode_measurements(data, "measurements.file")

    def test_measurement_set(self):
        """Test that outcomes are counted over the whole set."""
        povms = [encode_povm(POVM.projective(np.eye(3)))] * 2
        assert decode_measurements(povms, "povms").n_outcomes == 6

    def test_partition_from_band_edges(self, four_level):
        """Test a band partition from cut points."""
        P = decode_partition({"band_edges": [1.7]}, four_level, "partition")
        assert P.ranks == (2, 2)

    def test_partition_from_projectors(self, four_level):
        """Test an explicit projector partition with labels."""
        # Act
        P = decode_partition(
            {
                "projectors": [
                    np.diag([1, 0, 0, 0]).tolist(),
                    np.diag([0, 1, 1, 1]).tolist(),
                ],
                "labels": ["ground", "rest"],
            },
            four_level,
            "partition",
        )

        # Assert
        assert P.labels == ("ground", "rest")

    def test_partition_needs_content(self, four_level):
        """Test that an empty partition section is rejected."""
        with pytest.raises(ConfigError):
            decode_partition({}, four_level, "partition")


class TestSeriesCsv:
    """Test suite for time-series output."""

    def test_columns(self, tmp_path):
        """Test that complex columns split into _re and _im."""
        # Act
        path = write_series_csv(
            tmp_path / "series.csv",
            [0.0, 0.5],
            {"distance": [0.1, 0.2], "lambda": np.array([1 + 2j, 3 - 4j])},
        )

        # Assert
        with path.open() as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["t", "distance", "lambda_re", "lambda_im"]
        assert [float(x) for x in rows[2]] == [0.5, 0.2, 3.0, -4.0]
        assert len(rows) == 3
