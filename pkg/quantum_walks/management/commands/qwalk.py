"""
Командная строка библиотеки: python manage.py qwalk <команда> ...

Коды выхода: 0 - успех, 1 - ошибка валидации, 2 - численная ошибка
(резонанс после сдвига сетки), 64 - ошибка аргументов.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management.base import BaseCommand, CommandError, CommandParser

from quantum_walks.conf import RunConfig, get_tolerances
from quantum_walks.documents import dump_walk, load_graph, load_walk, read_document, walk_from_document
from quantum_walks.exceptions import BadTailIndex, NumericFailure, ValidationFailure
from quantum_walks.graph_service import build_graph, find_pairing, is_simple_graph
from quantum_walks.oracle_service import BasisEdge, WalkSimulator, arrival_table as oracle_arrival_table
from quantum_walks.reports import (
    arrival_table,
    coefficient_table,
    read_scatter_csv,
    scatter_table,
    simulation_table,
    write_csv,
)
from quantum_walks.scattering_service import ScatteringService
from quantum_walks.structure_service import reverse_structure
from quantum_walks.surgery_service import (
    AmplitudeFunction,
    HandleSpec,
    add_handle_amplitudes,
    add_handle_graph,
    compare_graphs,
    cut_edge_amplitudes,
    cut_edge_graph,
    max_discrepancy,
    splice,
)

EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64


class UsageErrorParser(argparse.ArgumentParser):
    """Любая ошибка разбора аргументов завершает процесс с кодом 64"""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: ошибка: {message}\n")
        sys.exit(EXIT_USAGE)


class QwalkCommandParser(CommandParser):
    """Корневой парсер команды с тем же кодом выхода 64"""

    def error(self, message):
        UsageErrorParser.error(self, message)


def _pair(value: str):
    first, sep, second = value.partition(',')
    if not sep or not first or not second:
        raise argparse.ArgumentTypeError(f"ожидалось OUT_ID,IN_ID, получено {value!r}")
    return first.strip(), second.strip()


def _splice_target(value: str):
    path, sep, rest = value.rpartition(':')
    if not sep or not path:
        raise argparse.ArgumentTypeError(f"ожидалось FILE2:OUT_ID,IN_ID, получено {value!r}")
    return Path(path), _pair(rest)


def _start(value: str) -> BasisEdge:
    slot, sep, depth = value.rpartition(':')
    if not sep:
        return BasisEdge(value, 0)
    try:
        return BasisEdge(slot, int(depth))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"глубина должна быть целой: {value!r}") from exc


class Command(BaseCommand):
    help = 'Рассеяние квантовых блужданий на эйлеровых графах с хвостами'

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = QwalkCommandParser
        return parser

    def add_arguments(self, parser):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--tolerance', action='append', default=[], metavar='KEY=VALUE',
                            help='Переопределить допуск (unitary, num, eig, compare, sing)')
        common.add_argument('-o', '--output', type=Path, default=None,
                            help='Путь к результату (по умолчанию QWALK_OUTPUT_DIR/<имя>)')
        common.add_argument('--angles', type=int, default=64, help='Число углов на окружности')
        common.add_argument('--samples', type=int, default=256, help='Число отсчётов квадратуры')
        common.add_argument('--n-max', type=int, default=50, help='Максимальная степень ряда')
        common.add_argument('--workers', type=int, default=1, help='Потоков для отсчётов на окружности')

        surgery = argparse.ArgumentParser(add_help=False)
        surgery.add_argument('--amplitudes-csv', type=Path, default=None,
                             help='Записать составные амплитуды на сетке углов')
        surgery.add_argument('--edge-id', default=None, help='Идентификатор нового ребра')

        subparsers = parser.add_subparsers(dest='command', required=True, parser_class=UsageErrorParser)

        def add(name, help_text, parents=(common,)):
            sub = subparsers.add_parser(name, help=help_text, parents=list(parents))
            sub.add_argument('file', type=Path, help='JSON-документ блуждания')
            return sub

        add('validate', 'Проверить документ графа или блуждания')
        add('scatter', 'S(e^{iθ}) на сетке углов -> CSV')
        add('coeffs', 'Коэффициенты Тейлора c_n -> CSV')
        add('arrivals', 'Вероятности первого прихода q(n) -> CSV')
        sub = add('exit-prob', 'Вероятность когда-либо выйти через хвост')
        sub.add_argument('--method', choices=['parseval', 'quadrature'], default='parseval')
        sub.add_argument('--in', dest='in_tail', default=None, help='id входного хвоста')
        sub.add_argument('--out', dest='out_tail', default=None, help='id выходного хвоста')
        add('bound-states', 'Связанные состояния (подпространство H₀)')
        add('reverse', 'Обращённое блуждание -> JSON')
        sub = add('add-handle', 'Добавить ручку', parents=(common, surgery))
        sub.add_argument('--add-handle', dest='handle', type=_pair, required=True, metavar='OUT_ID,IN_ID')
        sub = add('cut-edge', 'Разрезать внутреннее ребро', parents=(common, surgery))
        sub.add_argument('--cut-edge', dest='cut', required=True, metavar='EDGE_ID')
        sub = add('splice', 'Склеить два блуждания', parents=(common, surgery))
        sub.add_argument('--splice', dest='splice_target', type=_splice_target, required=True,
                         metavar='FILE2:OUT_ID,IN_ID')
        sub = add('compare', 'Сравнить два графа с одним входом и одним выходом')
        sub.add_argument('--compare', dest='other', type=Path, required=True, metavar='FILE2')
        sub = add('simulate', 'Прямая симуляция -> CSV (шаг, ребро, Re, Im)')
        sub.add_argument('--start', type=_start, required=True, metavar='SLOT[:DEPTH]')
        sub.add_argument('--steps', type=int, required=True)
        sub.add_argument('--depth', type=int, default=None, help='Глубина хвостов (по умолчанию = steps)')
        sub = add('selfcheck', 'Самопроверка: составные формулы, оракул, обращение')
        sub.add_argument('--against', type=Path, default=None,
                         help='CSV амплитуд (из add-handle/cut-edge/splice) для сверки с документом')
        add('pairing', 'Найти спаривание рёбер графа')

    # ======================================================================
    # ДИСПЕТЧЕР
    # ======================================================================

    def handle(self, *args, **options):
        try:
            overrides = RunConfig.parse_overrides(options['tolerance'])
            config = RunConfig(
                command=options['command'],
                inputs=[options['file']],
                tolerances=get_tolerances().override(**overrides),
                output=options['output'],
                angles=options['angles'],
                samples=options['samples'],
                n_max=options['n_max'],
                workers=options['workers'],
            )
        except ValueError as exc:
            raise CommandError(f"Некорректные параметры: {exc}", returncode=EXIT_USAGE)

        handler = getattr(self, '_cmd_' + config.command.replace('-', '_'))
        try:
            handler(config, options)
        except ValidationFailure as exc:
            raise CommandError(f"Ошибка валидации: {exc}", returncode=EXIT_VALIDATION)
        except NumericFailure as exc:
            raise CommandError(f"Численная ошибка: {exc}", returncode=EXIT_NUMERIC)

    def _load(self, config: RunConfig, path=None):
        return load_walk(path or config.inputs[0], config.tolerances)

    def _stem(self, config: RunConfig) -> str:
        return Path(config.inputs[0]).stem

    def _written(self, path: Path):
        self.stdout.write(self.style.SUCCESS(f'💾 Записано: {path}'))

    # ======================================================================
    # КОМАНДЫ
    # ======================================================================

    def _cmd_validate(self, config, options):
        document = read_document(config.inputs[0])
        if 'locals' in document:
            walk = walk_from_document(document, config.tolerances)
            graph = walk.graph
            kind = 'блуждание'
        else:
            graph = build_graph(document)
            kind = 'граф'
        self.stdout.write(self.style.SUCCESS(
            f'✅ {kind} корректен: |V|={len(graph.vertices)}, m={graph.m}, K={graph.K}'
        ))

    def _cmd_scatter(self, config, options):
        walk = self._load(config)
        service = ScatteringService.for_walk(walk, config.tolerances)
        table = scatter_table(
            lambda z: service.scattering_matrix(z).matrix,
            [t.id for t in walk.graph.incoming_tails],
            [t.id for t in walk.graph.outgoing_tails],
            config.angles,
            max_workers=config.workers,
        )
        self._written(write_csv(table, config.resolve_output(f'{self._stem(config)}_scatter.csv')))

    def _cmd_coeffs(self, config, options):
        walk = self._load(config)
        series = ScatteringService.for_walk(walk, config.tolerances).transmission_series(config.n_max)
        table = coefficient_table(series, *self._tail_ids(walk))
        self._written(write_csv(table, config.resolve_output(f'{self._stem(config)}_coeffs.csv')))

    def _cmd_arrivals(self, config, options):
        walk = self._load(config)
        series = ScatteringService.for_walk(walk, config.tolerances).transmission_series(config.n_max)
        table = arrival_table(series, *self._tail_ids(walk))
        self._written(write_csv(table, config.resolve_output(f'{self._stem(config)}_arrivals.csv')))

    def _cmd_exit_prob(self, config, options):
        walk = self._load(config)
        g = walk.graph
        service = ScatteringService.for_walk(walk, config.tolerances)
        ins = self._select(g.incoming_tails, options['in_tail'])
        outs = self._select(g.outgoing_tails, options['out_tail'])
        rows = []
        for k in ins:
            for j in outs:
                if options['method'] == 'parseval':
                    result = service.exit_probability_parseval(k, j, config.n_max)
                else:
                    result = service.exit_probability_quadrature(k, j, config.samples, config.workers)
                rows.append({
                    'in_tail': g.incoming_tails[k].id,
                    'out_tail': g.outgoing_tails[j].id,
                    'method': result.method,
                    'value': result.value,
                    'error': result.error,
                    'residual': result.residual if result.residual is not None else np.nan,
                })
                self.stdout.write(
                    f'{g.incoming_tails[k].id} -> {g.outgoing_tails[j].id}: '
                    f'P = {result.value:.12f} (± {result.error:.3e})'
                )
        table = pd.DataFrame(rows, columns=['in_tail', 'out_tail', 'method', 'value', 'error', 'residual'])
        self._written(write_csv(table, config.resolve_output(f'{self._stem(config)}_exit.csv')))

    def _cmd_bound_states(self, config, options):
        walk = self._load(config)
        basis = ScatteringService.for_walk(walk, config.tolerances).bound
        self.stdout.write(self.style.SUCCESS(f'🔒 dim H₀ = {basis.dimension}'))
        for lam in basis.eigenvalues:
            self.stdout.write(f'  λ = {lam.real:+.12f} {lam.imag:+.12f}i')

    def _cmd_reverse(self, config, options):
        walk = reverse_structure(self._load(config))
        self._written(dump_walk(walk, config.resolve_output(f'{self._stem(config)}_reversed.json')))

    def _cmd_add_handle(self, config, options):
        walk = self._load(config)
        out_id, in_id = options['handle']
        spec = HandleSpec.from_ids(walk.graph, out_id, in_id, options['edge_id'])
        result = add_handle_graph(walk, spec, config.tolerances)
        self._written(dump_walk(result, config.resolve_output(f'{self._stem(config)}_handle.json')))
        if options['amplitudes_csv']:
            composed = add_handle_amplitudes(AmplitudeFunction.from_walk(walk, config.tolerances), spec, config.tolerances)
            self._write_amplitudes(composed, result, config, options['amplitudes_csv'])

    def _cmd_cut_edge(self, config, options):
        walk = self._load(config)
        edge_id = options['cut']
        result = cut_edge_graph(walk, edge_id, tolerances=config.tolerances)
        self._written(dump_walk(result, config.resolve_output(f'{self._stem(config)}_cut.json')))
        if options['amplitudes_csv']:
            composed = cut_edge_amplitudes(walk, edge_id, config.tolerances)
            self._write_amplitudes(composed, result, config, options['amplitudes_csv'])

    def _cmd_splice(self, config, options):
        walk1 = self._load(config)
        path2, (out_id, in_id) = options['splice_target']
        walk2 = self._load(config, path2)
        try:
            p = walk1.graph.out_tail_index(out_id)
            q = walk2.graph.in_tail_index(in_id)
        except KeyError as exc:
            raise BadTailIndex(f"нет хвоста {exc.args[0]!r}") from exc
        result = splice(walk1, walk2, p, q, options['edge_id'], config.tolerances)
        self._written(dump_walk(result.walk, config.resolve_output(f'{self._stem(config)}_splice.json')))
        if options['amplitudes_csv']:
            self._write_amplitudes(result.amplitudes, result.walk, config, options['amplitudes_csv'])

    def _cmd_compare(self, config, options):
        walk1 = self._load(config)
        walk2 = self._load(config, options['other'])
        verdict = compare_graphs(walk1, walk2, config.angles, config.tolerances, config.workers)
        style = self.style.SUCCESS if verdict.indistinguishable else self.style.WARNING
        self.stdout.write(style(f'{verdict.label} (max |τ₂| = {verdict.max_dark:.3e} при θ = {verdict.theta:.6f})'))

    def _cmd_simulate(self, config, options):
        walk = self._load(config)
        steps = options['steps']
        if steps < 0:
            raise CommandError('--steps должно быть ≥ 0', returncode=EXIT_USAGE)
        depth = options['depth'] if options['depth'] is not None else max(steps, 1)
        if depth < 1:
            raise CommandError('--depth должно быть ≥ 1', returncode=EXIT_USAGE)
        simulator = WalkSimulator(walk, depth)
        history = simulator.run(options['start'], steps)
        table = simulation_table(simulator, history)
        self._written(write_csv(table, config.resolve_output(f'{self._stem(config)}_simulate.csv')))

    def _cmd_selfcheck(self, config, options):
        walk = self._load(config)
        tol = config.tolerances
        service = ScatteringService.for_walk(walk, tol)
        direct = AmplitudeFunction.from_walk(walk, tol)
        checks = []

        checks.append(('изометрия на окружности', service.unitarity_defect(config.angles, config.workers), tol.num))

        series = service.transmission_series(config.n_max)
        oracle = oracle_arrival_table(walk, config.n_max)
        checks.append(('ряд = оракул', float(np.max(np.abs(series.coefficients - oracle), initial=0.0)), tol.num))

        reversed_walk = ScatteringService.for_walk(reverse_structure(walk), tol)
        transposed = AmplitudeFunction(walk.K, 'composed', lambda z: direct(z).T)
        reversed_direct = AmplitudeFunction(walk.K, 'direct', lambda z: reversed_walk.scattering_matrix(z).matrix)
        checks.append(('S_R = Sᵀ', max_discrepancy(reversed_direct, transposed, config.angles, max_workers=config.workers), tol.num))

        if walk.K >= 1:
            spec = HandleSpec(0, 0)
            composed = add_handle_amplitudes(direct, spec, tol)
            handled = AmplitudeFunction.from_walk(add_handle_graph(walk, spec, tol), tol)
            checks.append(('ручка: формула = граф', max_discrepancy(composed, handled, config.angles, max_workers=config.workers), tol.num))

        if walk.graph.m >= 1:
            edge_id = walk.graph.edge_ids[0]
            composed = cut_edge_amplitudes(walk, edge_id, tol)
            cut = AmplitudeFunction.from_walk(cut_edge_graph(walk, edge_id, tolerances=tol), tol)
            checks.append(('разрез: формула = граф', max_discrepancy(composed, cut, config.angles, max_workers=config.workers), tol.num))

        if options['against']:
            checks.append(('CSV = документ', self._csv_discrepancy(walk, service, options['against']), tol.num))

        failed = 0
        for name, value, bound in checks:
            if value <= bound:
                self.stdout.write(self.style.SUCCESS(f'✅ {name}: {value:.3e}'))
            else:
                failed += 1
                self.stdout.write(self.style.ERROR(f'❌ {name}: {value:.3e} > {bound:.1e}'))
        if failed:
            raise CommandError(f"Самопроверка не пройдена: {failed} из {len(checks)}", returncode=EXIT_VALIDATION)
        self.stdout.write(self.style.SUCCESS(f'📊 Все проверки пройдены: {len(checks)}'))

    def _cmd_pairing(self, config, options):
        graph = load_graph(config.inputs[0])
        pairing = find_pairing(graph)
        if pairing is None:
            self.stdout.write(self.style.WARNING('⚠️ Спаривание не существует'))
        else:
            self.stdout.write(self.style.SUCCESS(f'✅ Спаривание найдено ({len(pairing) // 2} пар)'))
            for first, second in sorted(pairing.items()):
                if first < second:
                    self.stdout.write(f'  {first} <-> {second}')
        self.stdout.write(f'Простой граф: {"да" if is_simple_graph(graph) else "нет"}')

    # ======================================================================
    # ВСПОМОГАТЕЛЬНЫЕ
    # ======================================================================

    @staticmethod
    def _tail_ids(walk):
        return [t.id for t in walk.graph.incoming_tails], [t.id for t in walk.graph.outgoing_tails]

    @staticmethod
    def _select(tails, tail_id):
        if tail_id is None:
            return list(range(len(tails)))
        for index, tail in enumerate(tails):
            if tail.id == tail_id:
                return [index]
        raise BadTailIndex(f"нет хвоста {tail_id!r}")

    def _write_amplitudes(self, amplitudes, walk, config, path):
        table = scatter_table(amplitudes, *self._tail_ids(walk), config.angles, config.workers)
        self._written(write_csv(table, path))

    def _csv_discrepancy(self, walk, service, path) -> float:
        table = read_scatter_csv(path)
        in_index = {t.id: k for k, t in enumerate(walk.graph.incoming_tails)}
        out_index = {t.id: j for j, t in enumerate(walk.graph.outgoing_tails)}
        worst = 0.0
        for theta, group in table.groupby('theta', sort=False):
            S = service.scattering_matrix(np.exp(1j * theta)).matrix
            for row in group.itertuples(index=False):
                try:
                    expected = S[out_index[row.out_tail], in_index[row.in_tail]]
                except KeyError as exc:
                    raise BadTailIndex(f"хвост {exc.args[0]!r} из CSV отсутствует в документе") from exc
                worst = max(worst, abs(complex(row.re, row.im) - expected))
        return worst
