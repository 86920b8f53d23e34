"""Ablation study over the graph encoders and the rule markers"""

from collections import OrderedDict

import numpy as np
import pandas as pd

import dgm
from dgm.config import ABLATION_FLAGS
from dgm.evaluate import evaluate
from dgm.train import train


logger = dgm.logger.getChild(__name__)


DEFAULT_ABLATIONS = OrderedDict([
    ('full', {}),
    ('w/o explicit', {'disable_explicit_graph': True}),
    ('w/o implicit', {'disable_implicit_graph': True}),
    ('w/o both', {'disable_explicit_graph': True,
                  'disable_implicit_graph': True}),
    ('w/o [RULE]', {'disable_rule_marker': True}),
])


def _flags(combination):

    unknown = set(combination) - set(ABLATION_FLAGS)

    if unknown:
        raise ValueError("Unknown ablation flags: {}".format(sorted(unknown)))

    flags = {k: False for k in ABLATION_FLAGS}
    flags.update({k: bool(v) for k, v in combination.items()})

    return flags


def run_ablation(config, train_set, eval_set, combinations=None, seeds=None,
                 dev_set=None):
    """Trains and evaluates one model per ablation flag combination

    Every combination is trained with the same seeds. Metrics are averaged
    over seeds and the deltas are taken against the first combination.

    Parameters
    ----------
    config : TrainConfig
        Base configuration; its ablation flags are replaced
    train_set : sequence of Example
    eval_set : sequence of Example
        Examples the reported metrics are computed on
    combinations : mapping, optional
        Name to a dict of ablation flags. Defaults to
        :data:`DEFAULT_ABLATIONS`.
    seeds : sequence of int, optional
        Defaults to ``[config.seed]``
    dev_set : sequence of Example, optional
        Model selection set passed to :func:`dgm.train.train`

    Returns
    -------
    pandas.DataFrame
        One row per combination with the mean micro and macro accuracy and
        their differences from the first row

    """

    if combinations is None:
        combinations = DEFAULT_ABLATIONS

    if seeds is None:
        seeds = [config.seed]

    if len(combinations) == 0 or len(seeds) == 0:
        raise ValueError("run_ablation requires combinations and seeds")

    rows = []

    for name, combination in combinations.items():

        flags = _flags(combination)
        micro = []
        macro = []

        for seed in seeds:
            run_config = config.replace(seed=seed, **flags)
            result = train(run_config, train_set, dev_set)
            report = evaluate(result.model, eval_set)
            micro.append(report.micro)
            macro.append(report.macro)

            logger.info("{} (seed {}): micro {:.4f}, macro {:.4f}".format(
                name, seed, report.micro, report.macro))

        rows.append({'model': name,
                     'micro': float(np.mean(micro)),
                     'macro': float(np.mean(macro)),
                     'seeds': len(seeds)})

    table = pd.DataFrame(rows).set_index('model')

    table['delta_micro'] = table['micro'] - table['micro'].iloc[0]
    table['delta_macro'] = table['macro'] - table['macro'].iloc[0]

    return table[['micro', 'macro', 'delta_micro', 'delta_macro', 'seeds']]
