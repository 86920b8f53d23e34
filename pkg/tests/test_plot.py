import unittest
from unittest import TestCase

import matplotlib
import numpy as np
import pandas as pd

from dgm.corpus import GeneratorConfig, generate_synthetic
from dgm.graph import relation_histogram, relation_table
from dgm.train import LOG_COLUMNS

matplotlib.use('Agg')

from dgm.plot import metrics_plot, relation_histogram_plot  # noqa: E402


class TestPlots(TestCase):

    def test_metrics_plot(self):

        log = pd.DataFrame({'epoch': [1, 2, 3],
                            'loss': [1.5, 1.0, 0.8],
                            'decision_loss': [1.0, 0.7, 0.5],
                            'entailment_loss': [0.5, 0.3, 0.3],
                            'span_loss': [np.nan] * 3,
                            'grad_norm': [2.0, 1.0, 1.0],
                            'train_micro': [0.2, 0.5, 0.7],
                            'dev_micro': [np.nan] * 3,
                            'dev_macro': [np.nan] * 3},
                           columns=LOG_COLUMNS)

        fig = metrics_plot(log)
        loss_ax, acc_ax = fig.axes

        self.assertEqual(len(loss_ax.get_lines()), 3)
        self.assertEqual(len(acc_ax.get_lines()), 1)

    def test_relation_histogram_plot(self):

        dataset = generate_synthetic(GeneratorConfig(n_examples=20), 0)

        ax = relation_histogram_plot(relation_histogram(dataset))
        self.assertEqual(len(ax.patches), 16)

        table = relation_table({'a': dataset, 'b': dataset[:5]})
        ax = relation_histogram_plot(table)
        self.assertEqual(len(ax.patches), 32)


if __name__ == '__main__':
    unittest.main()
