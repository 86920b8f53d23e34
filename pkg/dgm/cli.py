"""Command-line interface

Examples
--------
Generate data, train on it and evaluate the checkpoint::

    dgm gen-data --seed 1 --out train.jsonl
    dgm gen-data --seed 2 --out dev.jsonl
    dgm train --config toy.yaml --train train.jsonl --dev dev.jsonl \\
        --out model.h5 --log metrics.csv
    dgm eval --ckpt model.h5 --data dev.jsonl --report report.csv

"""

import argparse
import sys

import dgm
from dgm.config import TrainConfig
from dgm.corpus import (GeneratorConfig, Vocabulary, generate_synthetic,
                        load_dataset, save_dataset, scenario_subset)
from dgm.evaluate import evaluate
from dgm.graph import build_levi_graph, relation_table, serialize_graph
from dgm.model import DGMModel, check_gradients
from dgm.train import train


logger = dgm.logger.getChild(__name__)


def _gen_data(args):

    if args.config is not None:
        config = GeneratorConfig.from_yaml(args.config)
    else:
        config = GeneratorConfig()

    if args.n is not None:
        config = config.replace(n_examples=args.n)

    save_dataset(generate_synthetic(config, args.seed), args.out)

    return 0


def _train(args):

    config = TrainConfig.from_yaml(args.config)

    if args.seed is not None:
        config = config.replace(seed=args.seed)

    train_set = load_dataset(args.train)
    dev_set = load_dataset(args.dev) if args.dev is not None else None

    result = train(config, train_set, dev_set)
    result.model.save(args.out)

    if args.log is not None:
        result.log.to_csv(args.log, index=False)
        logger.info("Wrote metrics log to {}".format(args.log))

    if args.plot is not None:
        from dgm.plot import metrics_plot
        metrics_plot(result.log).savefig(args.plot)

    print(result.log.to_string(index=False))

    return 0


def _eval(args):

    model = DGMModel.load(args.ckpt)
    dataset = load_dataset(args.data)

    if args.scenario_subset:
        dataset = scenario_subset(dataset)

    report = evaluate(model, dataset)

    print(report.to_series().to_string())
    print()
    print(report.class_table().to_string())

    if args.report is not None:
        report.to_csv(args.report)

    return 0


def _grad_check(args):

    if args.random:
        config = TrainConfig(seed=args.seed, d=8, heads=2, layers=2)
        model = None
    else:
        model = DGMModel.load(args.ckpt)

    if args.data is not None:
        example = load_dataset(args.data)[args.index]
    else:
        generator = GeneratorConfig(n_examples=1, edu_range=(2, 2),
                                    decision_priors={'inquire': 1.0})
        example = generate_synthetic(generator, args.seed)[0]

    if model is None:
        model = DGMModel.initialize(Vocabulary.build([example]), config)

    errors = check_gradients(model, example, samples=args.samples,
                             seed=args.seed)

    print(errors.to_string())

    worst = errors.max()
    print("max relative error {:.3e} ({})".format(worst, errors.idxmax()))

    return 0 if worst < args.tol else 1


def _graph(args):

    example = load_dataset(args.data)[args.index]
    graph = build_levi_graph(example.edu_count, example.relation_links)

    sys.stdout.write(serialize_graph(graph))

    return 0


def _stats(args):

    splits = {path: load_dataset(path) for path in args.data}
    table = relation_table(splits)

    print(table.to_string())

    if args.csv is not None:
        table.to_csv(args.csv)

    if args.plot is not None:
        from dgm.plot import relation_histogram_plot
        relation_histogram_plot(table).get_figure().savefig(args.plot)

    return 0


def build_parser():

    parser = argparse.ArgumentParser(
        prog='dgm',
        description='Dialogue graph modeling for conversational machine '
                    'reading')
    parser.add_argument('--log-level', default='warning',
                        choices=['debug', 'info', 'warning', 'error',
                                 'critical'])

    subparsers = parser.add_subparsers(dest='command', required=True)

    p = subparsers.add_parser('gen-data', help='generate a synthetic dataset')
    p.add_argument('--config', help='generator configuration YAML file')
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--n', type=int, help='number of examples')
    p.add_argument('--out', required=True, help='output JSON Lines file')
    p.set_defaults(func=_gen_data)

    p = subparsers.add_parser('train', help='train a model')
    p.add_argument('--config', required=True,
                   help='training configuration YAML file')
    p.add_argument('--train', required=True)
    p.add_argument('--dev')
    p.add_argument('--out', required=True, help='checkpoint file')
    p.add_argument('--seed', type=int, help='override the configured seed')
    p.add_argument('--log', help='per-epoch metrics CSV file')
    p.add_argument('--plot', help='training curve image file')
    p.set_defaults(func=_train)

    p = subparsers.add_parser('eval', help='evaluate a checkpoint')
    p.add_argument('--ckpt', required=True)
    p.add_argument('--data', required=True)
    p.add_argument('--report', help='report CSV file')
    p.add_argument('--scenario-subset', action='store_true',
                   help='only examples with a scenario and no history')
    p.set_defaults(func=_eval)

    p = subparsers.add_parser('grad-check',
                              help='compare analytic and numeric gradients')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--ckpt')
    source.add_argument('--random', action='store_true')
    p.add_argument('--data', help='dataset holding the example to check')
    p.add_argument('--index', type=int, default=0)
    p.add_argument('--tol', type=float, default=1e-4)
    p.add_argument('--samples', type=int, default=5,
                   help='coordinates checked per parameter')
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=_grad_check)

    p = subparsers.add_parser('graph',
                              help='dump the Levi graph of an example')
    p.add_argument('--data', required=True)
    p.add_argument('--index', type=int, default=0)
    p.set_defaults(func=_graph)

    p = subparsers.add_parser('stats', help='relation type statistics')
    p.add_argument('--data', required=True, nargs='+')
    p.add_argument('--csv', help='table CSV file')
    p.add_argument('--plot', help='bar chart image file')
    p.set_defaults(func=_stats)

    return parser


def main(argv=None):

    args = build_parser().parse_args(argv)

    dgm.set_logging_level(args.log_level)

    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
