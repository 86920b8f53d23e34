"""Decision, entailment and span evaluation"""

import numpy as np
import pandas as pd

import dgm
from dgm.corpus import Decision
from dgm.span import span_metrics


logger = dgm.logger.getChild(__name__)


class EvalReport:
    """Evaluation metrics of a dataset

    Macro accuracy is the unweighted mean of the per-class accuracies of the
    classes present in the gold labels; the accuracy of an absent class is
    NaN. Span metrics cover the examples whose gold and predicted decisions
    are both Inquire and are NaN when there are none.

    Parameters
    ----------
    micro : float
    macro : float
    class_accuracy : dict
        Decision to accuracy
    class_support : dict
        Decision to number of gold examples
    entailment_accuracy : float
    span_exact_match : float
    span_f1 : float
    span_count : int
    count : int

    """

    def __init__(self, micro, macro, class_accuracy, class_support,
                 entailment_accuracy, span_exact_match, span_f1, span_count,
                 count):

        self.micro = micro
        self.macro = macro
        self.class_accuracy = dict(class_accuracy)
        self.class_support = dict(class_support)
        self.entailment_accuracy = entailment_accuracy
        self.span_exact_match = span_exact_match
        self.span_f1 = span_f1
        self.span_count = span_count
        self.count = count

    @classmethod
    def from_predictions(cls, predicted, gold, predicted_entailment=None,
                         gold_entailment=None, predicted_spans=None,
                         gold_spans=None):
        """Computes a report from aligned predictions and gold labels

        Parameters
        ----------
        predicted, gold : sequence of Decision
        predicted_entailment, gold_entailment : sequence of sequence
            Per-example entailment states; examples with empty gold states
            are skipped
        predicted_spans, gold_spans : sequence
            Per-example spans or None

        Returns
        -------
        EvalReport

        """

        predicted = [Decision.from_name(d) for d in predicted]
        gold = [Decision.from_name(d) for d in gold]

        if len(predicted) != len(gold):
            raise ValueError(
                "{} predictions for {} gold decisions".format(
                    len(predicted), len(gold)))

        if len(gold) == 0:
            raise ValueError("Cannot evaluate an empty dataset")

        correct = np.array([p == g for p, g in zip(predicted, gold)])

        class_accuracy = {}
        class_support = {}

        for decision in Decision:
            members = np.array([g == decision for g in gold])
            class_support[decision] = int(members.sum())
            if members.any():
                class_accuracy[decision] = float(correct[members].mean())
            else:
                class_accuracy[decision] = float('nan')

        present = [a for a in class_accuracy.values() if not np.isnan(a)]

        if len(present) < len(Decision):
            logger.warning(
                "Macro accuracy averages {} of {} classes".format(
                    len(present), len(Decision)))

        entailment_accuracy = float('nan')

        if predicted_entailment is not None and gold_entailment is not None:
            hits = [p == g
                    for ps, gs in zip(predicted_entailment, gold_entailment)
                    if len(gs)
                    for p, g in zip(ps, gs)]
            if hits:
                entailment_accuracy = float(np.mean(hits))

        pred_spans = []
        ref_spans = []

        if predicted_spans is not None and gold_spans is not None:
            for p, g, ps, gs in zip(predicted, gold, predicted_spans,
                                    gold_spans):
                if p == g == Decision.INQUIRE and ps is not None and \
                        gs is not None:
                    pred_spans.append(ps)
                    ref_spans.append(gs)

        spans = span_metrics(pred_spans, ref_spans)

        return cls(micro=float(correct.mean()),
                   macro=float(np.mean(present)),
                   class_accuracy=class_accuracy,
                   class_support=class_support,
                   entailment_accuracy=entailment_accuracy,
                   span_exact_match=spans.exact_match,
                   span_f1=spans.f1,
                   span_count=spans.count,
                   count=len(gold))

    def to_series(self):
        """Report as one row of a results table

        Returns
        -------
        pandas.Series

        """

        values = {'micro': self.micro, 'macro': self.macro}

        for decision in Decision:
            values[decision.value] = self.class_accuracy[decision]

        values['entailment'] = self.entailment_accuracy
        values['span_em'] = self.span_exact_match
        values['span_f1'] = self.span_f1
        values['span_count'] = self.span_count
        values['count'] = self.count

        return pd.Series(values)

    def class_table(self):
        """Per-class accuracy and gold support

        Returns
        -------
        pandas.DataFrame

        """

        table = pd.DataFrame(
            {'accuracy': [self.class_accuracy[d] for d in Decision],
             'support': [self.class_support[d] for d in Decision]},
            index=[d.value for d in Decision])
        table.index.name = 'decision'

        return table

    def to_csv(self, path):

        self.to_series().to_frame().T.to_csv(path, index=False)

        logger.info("Wrote evaluation report to {}".format(path))

    def __eq__(self, other):

        if not isinstance(other, EvalReport):
            return NotImplemented

        return self.to_series().equals(other.to_series())

    def __repr__(self):

        return 'EvalReport(micro={:.4f}, macro={:.4f}, count={})'.format(
            self.micro, self.macro, self.count)


def predict_dataset(model, dataset):
    """Predictions of `model` for every example

    Returns
    -------
    list of Prediction

    """

    return [model.predict(example) for example in dataset]


def evaluate(model, dataset):
    """Evaluates a model on a labeled dataset

    Parameters
    ----------
    model : DGMModel
    dataset : sequence of Example

    Returns
    -------
    EvalReport

    Raises
    ------
    ValueError
        If the dataset is empty or an example has no gold decision

    """

    if len(dataset) == 0:
        raise ValueError("Cannot evaluate an empty dataset")

    missing = [ex.example_id for ex in dataset if ex.gold_decision is None]
    if missing:
        raise ValueError(
            "Examples without gold decisions: {}".format(missing[:5]))

    predictions = predict_dataset(model, dataset)

    report = EvalReport.from_predictions(
        [p.decision for p in predictions],
        [ex.gold_decision for ex in dataset],
        [p.entailment for p in predictions],
        [ex.gold_entailment for ex in dataset],
        [p.span for p in predictions],
        [ex.gold_span for ex in dataset])

    logger.debug("Evaluated {!r}".format(report))

    return report
