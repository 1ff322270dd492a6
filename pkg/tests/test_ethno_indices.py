import io
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elderculture.errors import (ConfigError, FileAccessError, ModelDomainError, TraitTableError,
                                 UndefinedCorrelationError)
from elderculture.model import IndexSpec
from elderculture.models import ethno_indices


def table_from(text: str):
    return ethno_indices.load_trait_table(text.encode('utf-8'))


class TestLoading:

    def test_fixture(self, traits_path):
        table = ethno_indices.load_trait_table(traits_path)
        assert table.societies == ('s1', 's2', 's3', 's4', 's5')
        assert table.traits == ('a', 'b', 'c', 'd', 'e')
        assert int(table.frame['e'].isna().sum()) == 3

    def test_two_by_two_table(self):
        table = table_from("society,a,b\nx,3,0\ny,1,2\n")
        assert table.frame.to_numpy().tolist() == [[3, 0], [1, 2]]
        assert not table.frame.isna().any().any()

    def test_empty_cell_is_missing(self):
        table = table_from("society,a,b\nx,3,\n")
        assert table.frame['b'].isna().iloc[0]

    def test_invalid_code_names_the_cell(self):
        with pytest.raises(TraitTableError) as info:
            table_from("society,a,b\nx,3,0\ny,1,4\n")
        assert info.value.row == 3
        assert info.value.column == 'b'
        assert "'4'" in str(info.value)

    def test_duplicate_society(self):
        with pytest.raises(TraitTableError, match='Duplicate society'):
            table_from("society,a\nx,1\nx,2\n")

    def test_short_row(self):
        with pytest.raises(TraitTableError, match='fewer fields'):
            table_from("society,a,b\nx,1\n")

    def test_short_row_is_not_read_as_missing(self):
        with pytest.raises(TraitTableError) as info:
            table_from("society,a,b\nx,1,2\ny,1\nz,,\n")
        assert info.value.row == 3

    def test_long_row(self):
        with pytest.raises(TraitTableError, match='more fields'):
            table_from("society,a\nx,1,2\n")

    def test_blank_lines_are_skipped(self):
        table = table_from("society,a,b\n\nx,1,\n\n")
        assert table.frame.shape == (1, 2)
        assert table.frame['b'].isna().iloc[0]

    def test_duplicate_trait(self):
        with pytest.raises(TraitTableError, match='Duplicate trait'):
            table_from("society,a,a\nx,1,2\n")

    def test_stream_source(self):
        table = ethno_indices.load_trait_table(io.StringIO("society,a\nx,2\n"))
        assert table.frame.loc['x', 'a'] == 2

    def test_non_utf8_input_is_decoded(self):
        table = ethno_indices.load_trait_table("society,a\nSéo,1\n".encode('latin-1'))
        assert table.frame.shape == (1, 1)
        assert int(table.frame.iloc[0, 0]) == 1

    def test_built_in_specs(self):
        specs = ethno_indices.load_index_specs()
        assert len(specs) == 8
        assert specs['combined_production'].component_indices == (
            'direct_production', 'social_production', 'knowledge_provision')
        assert specs['openness'].negative_traits == ('communal_ownership_land',)

    def test_specs_file_must_exist(self, tmp_path):
        with pytest.raises(FileAccessError):
            ethno_indices.load_index_specs(str(tmp_path / 'missing.json'))

    def test_specs_file_must_define_indices(self, tmp_path):
        path = tmp_path / 'empty.json'
        path.write_text('{"indices": []}')
        with pytest.raises(ConfigError):
            ethno_indices.load_index_specs(str(path))


class TestIndices:

    def test_missing_counts_as_zero(self):
        table = table_from("society,a,b\nx,,\ny,1,2\n")
        scores = ethno_indices.build_index(table, IndexSpec('s', positive_traits=('a', 'b')))
        assert scores.tolist() == [0, 3]

    def test_positive_minus_negative(self):
        table = table_from("society,a,b,c\nx,3,2,1\n")
        spec = IndexSpec('s', positive_traits=('a', 'b'), negative_traits=('c',))
        assert ethno_indices.build_index(table, spec).tolist() == [4]

    def test_openness_index(self):
        spec = ethno_indices.load_index_specs()['openness']
        columns = [*spec.positive_traits, *spec.negative_traits]
        header = ','.join(['society', *columns])
        row = ','.join(['x', *['3'] * len(columns)])
        assert ethno_indices.build_index(table_from(f"{header}\n{row}\n"), spec).tolist() == [15]

    def test_unknown_column(self):
        table = table_from("society,a\nx,1\n")
        with pytest.raises(TraitTableError, match='unknown trait'):
            ethno_indices.build_index(table, IndexSpec('s', positive_traits=('z',)))

    def test_column_order_is_irrelevant(self):
        spec = IndexSpec('s', positive_traits=('a', 'b'), negative_traits=('c',))
        forward = ethno_indices.build_index(table_from("society,a,b,c\nx,3,1,2\ny,0,,1\n"), spec)
        shuffled = ethno_indices.build_index(table_from("society,c,a,b\nx,2,3,1\ny,1,0,\n"), spec)
        assert forward.tolist() == shuffled.tolist()

    def test_overlapping_traits_are_rejected(self):
        with pytest.raises(ValueError):
            IndexSpec('s', positive_traits=('a',), negative_traits=('a',))

    def test_composite_index(self, traits_path, specs_path):
        table = ethno_indices.load_trait_table(traits_path)
        scores = ethno_indices.build_indices(table, ethno_indices.load_index_specs(specs_path))
        assert list(scores.columns) == ['x', 'y', 'mixed', 'total']
        assert scores['x'].tolist() == [1, 2, 3, 4, 5]
        assert scores['y'].tolist() == [1, 3, 2, 5, 4]
        assert scores['mixed'].tolist() == [1, 2, 2, 3, 1]
        assert (scores['total'] == scores['x'] + scores['y']).all()

    def test_unresolvable_components(self, traits_path):
        table = ethno_indices.load_trait_table(traits_path)
        specs = {'loop': IndexSpec('loop', component_indices=('loop',))}
        with pytest.raises(ConfigError):
            ethno_indices.build_indices(table, specs)

    def test_summary(self, traits_path, specs_path):
        table = ethno_indices.load_trait_table(traits_path)
        summary = ethno_indices.summarize_indices(
            ethno_indices.build_indices(table, ethno_indices.load_index_specs(specs_path)))
        assert summary.loc['x', 'mean'] == pytest.approx(3.0)
        assert summary.loc['x', 'sd'] == pytest.approx(math.sqrt(2.5))
        assert summary.loc['x', 'min'] == 1 and summary.loc['x', 'max'] == 5
        assert summary.loc['x', 'n'] == 5


class TestCorrelation:

    def test_perfect_linear(self):
        result = ethno_indices.correlate([1, 2, 3, 4], [3, 5, 7, 9])
        assert result.r == pytest.approx(1.0)
        assert result.significant_95
        assert result.marker == '*'

    def test_negation(self):
        assert ethno_indices.correlate([1, 2, 3], [-1, -2, -3]).r == pytest.approx(-1.0)

    def test_hand_computed_fixture(self):
        result = ethno_indices.correlate([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])
        assert result.r == pytest.approx(0.8, abs=1e-9)
        assert result.t_statistic == pytest.approx(2.3094011, rel=1e-6)
        assert result.df == 3
        assert not result.significant_95
        assert result.test == 'two-tailed Student t'

    def test_alternative_fixture(self):
        # 10 / sqrt(148)
        assert ethno_indices.correlate([1, 2, 3, 4, 5], [2, 1, 4, 3, 6]).r == pytest.approx(0.8219949, rel=1e-6)

    def test_zero_variance(self):
        with pytest.raises(UndefinedCorrelationError):
            ethno_indices.correlate([1, 2, 3], [4, 4, 4])

    def test_two_points_are_not_tested(self):
        result = ethno_indices.correlate([1, 2], [2, 1])
        assert result.r == pytest.approx(-1.0)
        assert result.p_value is None and not result.significant_95

    def test_length_mismatch(self):
        with pytest.raises(ModelDomainError):
            ethno_indices.correlate([1, 2, 3], [1, 2])

    @given(st.lists(st.integers(min_value=-20, max_value=20), min_size=3, max_size=30).flatmap(
        lambda x: st.tuples(st.just(x), st.lists(st.integers(min_value=-20, max_value=20),
                                                 min_size=len(x), max_size=len(x)))),
        st.floats(min_value=0.1, max_value=10.0), st.floats(min_value=-10.0, max_value=10.0))
    @settings(max_examples=200)
    def test_affine_invariance_and_symmetry(self, series, scale, shift):
        """Property: r is symmetric, invariant under positive affine maps and flips under negation"""
        x, y = np.array(series[0], float), np.array(series[1], float)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            return
        r = ethno_indices.correlate(x, y).r
        assert ethno_indices.correlate(y, x).r == r
        assert ethno_indices.correlate(scale * x + shift, y).r == pytest.approx(r, abs=1e-9)
        assert ethno_indices.correlate(-x, y).r == pytest.approx(-r, abs=1e-12)

    def test_matrix_skips_self_and_repeated_pairs(self):
        scores = pd.DataFrame({'a': [1, 2, 3, 4], 'b': [2, 1, 4, 3], 'c': [1, 1, 2, 3]})
        results = ethno_indices.correlation_matrix(scores, ['a', 'b'], ['a', 'b', 'c'])
        assert [result.pair for result in results] == [('a', 'b'), ('a', 'c'), ('b', 'c')]

    def test_catalog_layout(self, traits_path, specs_path):
        catalog = ethno_indices.IndexCatalog(specs_path)
        scores = catalog.build(ethno_indices.load_trait_table(traits_path))
        rows = ethno_indices.correlation_rows(catalog.correlations(scores))
        assert [(row['index_a'], row['index_b']) for row in rows] == [('x', 'y'), ('mixed', 'y')]
        assert rows[0]['r'] == pytest.approx(0.8, abs=1e-9)
        assert rows[0]['marker'] == ''
