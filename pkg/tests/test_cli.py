import io
import json
import math

import pytest

from analysis.sensitivity import extremal_pair
from cli.commands import EXIT_INVALID, EXIT_OK, EXIT_VIOLATIONS, dispatch
from cli.render import render
from config.config import CSV_HEADER


def run(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    code = dispatch(list(argv), stdout=stdout, stderr=stderr)
    return code, stdout.getvalue(), stderr.getvalue()


class TestCounterexample:
    @pytest.mark.parametrize('C', ['0.5', '1.0', '3'])
    @pytest.mark.parametrize('epsilon', ['0.1', '1.0', '5'])
    def test_reports_violation(self, C, epsilon):
        code, out, _ = run('counterexample', '--clip', C, '--epsilon', epsilon)
        assert code == EXIT_VIOLATIONS
        finding = json.loads(out)
        assert finding['violated'] is True
        assert finding['l1_distance_after_clip'] == pytest.approx(
            8 * float(C) / 3, abs=1e-12)
        assert finding['ratio_exponent_factor'] == pytest.approx(4 / 3, abs=1e-12)

    def test_rescaled_mode_passes(self):
        code, out, _ = run('counterexample', '--clip', '1', '--epsilon', '1',
                           '--mode', 'corrected-rescaled')
        assert code == EXIT_OK
        assert json.loads(out)['violated'] is False


class TestSensitivity:
    def test_one_dim_claim_coincides(self):
        code, out, _ = run('sensitivity', '--dim', '1', '--clip', '1.0')
        assert code == EXIT_OK
        report = json.loads(out)
        assert report['claimed'] == report['true_analytic'] == 2.0

    def test_effective_epsilon(self):
        code, out, _ = run('sensitivity', '--dim', '64', '--clip', '1',
                           '--epsilon', '1')
        assert json.loads(out)['effective_epsilon'] == pytest.approx(8.0)

    def test_empirical_needs_seed(self):
        code, _, err = run('sensitivity', '--dim', '2', '--clip', '1',
                           '--empirical', '--vectors', '100')
        assert code == EXIT_INVALID
        assert '--seed' in err

    def test_empirical(self):
        code, out, _ = run('sensitivity', '--dim', '2', '--clip', '1', '--empirical',
                           '--vectors', '500', '--seed', '7', '--threads', '2')
        report = json.loads(out)
        assert code == EXIT_OK
        assert report['samples_used'] == 500
        assert report['empirical_max'] <= 2 * math.sqrt(2) + 1e-9


class TestClipAndNoise:
    def test_clip(self):
        code, out, _ = run('clip', '--norm', 'l2', '--clip', '1', '--vector', '3,4')
        assert code == EXIT_OK
        assert json.loads(out) == pytest.approx([0.6, 0.8])

    def test_clip_negative_leading_value(self):
        code, out, _ = run('clip', '--norm', 'l1', '--clip', '2', '--vector=-3,1')
        assert json.loads(out) == [-1.5, 0.5]

    def test_noise_is_reproducible(self):
        argv = ('noise', '--mode', 'corrected-rescaled', '--clip', '1',
                '--epsilon', '1', '--seed', '5', '--vector', '0.1,0.2,0.3')
        first, second = run(*argv), run(*argv)
        assert first[0] == EXIT_OK
        assert first[1] == second[1]
        assert len(json.loads(first[1])) == 3

    def test_noise_requires_seed(self):
        code, _, err = run('noise', '--clip', '1', '--epsilon', '1', '--vector', '1')
        assert code == EXIT_INVALID
        assert 'usage' in err

    def test_claimed_mode_warns(self):
        _, _, err = run('noise', '--clip', '1', '--epsilon', '1', '--seed', '1',
                        '--vector', '1,2')
        assert 'NOT ε-DP' in err


class TestAudit:
    def test_violations_exit_two(self, tmp_path):
        pairs = tmp_path / 'pairs.ndjson'
        pairs.write_text(
            '{"x": [-0.6666666666666666, -0.6666666666666666], '
            '"y": [0.6666666666666666, 0.6666666666666666]}\n'
            '\n'
            '[[0.1, 0.0], [0.2, 0.0]]\n', encoding='utf-8')
        code, out, _ = run('audit', '--mode', 'claimed-adept', '--clip', '1',
                           '--epsilon', '1', '--pairs-file', str(pairs))
        assert code == EXIT_VIOLATIONS
        lines = out.splitlines()
        assert len(lines) == 2
        assert [json.loads(line)['violated'] for line in lines] == [True, False]

    def test_corrected_mode_exit_zero(self, tmp_path):
        pairs = tmp_path / 'pairs.ndjson'
        pairs.write_text('[[-1, -1, 0], [1, 1, 0]]\n', encoding='utf-8')
        code, _, _ = run('audit', '--mode', 'corrected-l1clip', '--clip', '1',
                         '--epsilon', '1', '--pairs-file', str(pairs))
        assert code == EXIT_OK

    def test_rescaled_mode_accepts_extremal_pair_at_large_clip(self, tmp_path):
        x, y = extremal_pair(1000.0, 777)
        pairs = tmp_path / 'pairs.ndjson'
        pairs.write_text(json.dumps({'x': x.tolist(), 'y': y.tolist()}) + '\n',
                         encoding='utf-8')
        code, out, _ = run('audit', '--mode', 'corrected-rescaled', '--clip', '1000',
                           '--epsilon', '1', '--pairs-file', str(pairs))
        assert code == EXIT_OK
        assert json.loads(out)['violated'] is False

    def test_malformed_line(self, tmp_path):
        pairs = tmp_path / 'pairs.ndjson'
        pairs.write_text('{"x": [1, 2]}\n', encoding='utf-8')
        code, _, err = run('audit', '--clip', '1', '--epsilon', '1',
                           '--pairs-file', str(pairs))
        assert code == EXIT_INVALID
        assert ':1:' in err

    def test_dimension_mismatch(self, tmp_path):
        pairs = tmp_path / 'pairs.ndjson'
        pairs.write_text('[[1, 2], [1, 2, 3]]\n', encoding='utf-8')
        code, _, err = run('audit', '--clip', '1', '--epsilon', '1',
                           '--pairs-file', str(pairs))
        assert code == EXIT_INVALID
        assert 'mismatch' in err

    def test_missing_file(self, tmp_path):
        code, _, _ = run('audit', '--clip', '1', '--epsilon', '1',
                         '--pairs-file', str(tmp_path / 'absent.ndjson'))
        assert code == EXIT_INVALID


class TestSimulate:
    def test_one_dim_row(self):
        code, out, _ = run('simulate', '--dims', '1', '--vectors', '100',
                           '--sampler', 'uniform', '--seed', '1')
        assert code == EXIT_OK
        header, row, end = out.split('\n')
        assert header == ','.join(CSV_HEADER)
        assert row.split(',')[5] == '0.0'
        assert end == ''

    def test_both_samplers_to_file(self, tmp_path):
        target = tmp_path / 'fig.csv'
        code, out, _ = run('simulate', '--dims', '1,4', '--vectors', '50',
                           '--seed', '3', '--out', str(target))
        assert code == EXIT_OK
        assert out == ''
        lines = target.read_bytes().decode('utf-8').split('\n')
        assert len(lines) == 6
        assert [line.split(',')[1] for line in lines[1:5]] == [
            'uniform', 'uniform', 'gaussian', 'gaussian']

    def test_byte_identical_runs(self):
        argv = ('simulate', '--dims', '2,8', '--vectors', '80', '--seed', '9',
                '--pair-mode', 'sampled:300', '--sigma-convention', 'stddev')
        assert run(*argv)[1] == run(*argv)[1]

    def test_requires_seed(self):
        assert run('simulate', '--dims', '1')[0] == EXIT_INVALID

    def test_rejects_bad_pair_mode(self):
        code, _, err = run('simulate', '--seed', '1', '--pair-mode', 'some')
        assert code == EXIT_INVALID
        assert 'sampled:K' in err


class TestSurface:
    def test_help(self):
        code, out, _ = run('--help')
        assert code == EXIT_OK
        assert 'usage' in out

    @pytest.mark.parametrize('command, construct', [
        ('clip', 'clipping function'),
        ('noise', 'Laplace mechanism'),
        ('sensitivity', 'L1 sensitivity'),
        ('counterexample', 'counterexample'),
        ('audit', 'Exits 2 iff any pair violates'),
        ('simulate', 'Violation sweep'),
        ('factors', 'effective ε'),
    ])
    def test_subcommand_help_names_construct_and_verdict(self, command, construct):
        code, out, _ = run(command, '--help')
        assert code == EXIT_OK
        text = ' '.join(out.split())
        assert construct in text
        assert 'refuted' in text

    def test_unknown_subcommand(self):
        code, _, err = run('frobnicate')
        assert code == EXIT_INVALID
        assert 'usage' in err

    def test_unknown_flag(self):
        assert run('clip', '--clip', '1', '--vector', '1', '--bogus')[0] == EXIT_INVALID

    @pytest.mark.parametrize('value', ['0', '-1', 'nan', 'inf', 'x'])
    def test_rejects_bad_clip(self, value):
        assert run('counterexample', '--clip', value, '--epsilon', '1')[0] == EXIT_INVALID

    def test_factors(self):
        code, out, _ = run('factors', '--dims', '32,1024', '--epsilon', '1')
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == 'dim,claimed,true,factor,epsilon,effective_epsilon'
        assert lines[2].split(',')[3] == '32.0'

    def test_text_and_csv_formats(self):
        _, text, _ = run('counterexample', '--clip', '1', '--epsilon', '1',
                         '--format', 'text')
        assert 'violated' in text and ':' in text
        _, csv, _ = run('sensitivity', '--dim', '4', '--clip', '1', '--format', 'csv')
        assert csv.splitlines()[0].startswith('dim,norm,clip_constant')

    def test_json_factors(self):
        _, out, _ = run('factors', '--dims', '4', '--format', 'json')
        assert json.loads(out)['factor'] == 2.0


class TestRender:
    def test_vector_is_one_array(self):
        assert render([1.0, 2.5], 'json') == '[1.0, 2.5]\n'

    def test_records_are_newline_delimited(self):
        assert render([{'a': 1}, {'a': 2}], 'json') == '{"a": 1}\n{"a": 2}\n'

    def test_empty_list_renders_nothing(self):
        assert render([], 'json') == ''

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render({}, 'xml')
