import matplotlib.pyplot as plt
from matplotlib.ticker import MaxNLocator


def metrics_plot(log, fig=None):
    """Plots training loss and accuracy curves

    Parameters
    ----------
    log : pandas.DataFrame
        Per-epoch metrics log returned by :func:`dgm.train.train`
    fig : matplotlib.figure.Figure, optional

    Returns
    -------
    matplotlib.figure.Figure

    """

    if fig is None:
        fig = plt.figure()

    ax1 = fig.add_subplot(2, 1, 1)
    ax2 = fig.add_subplot(2, 1, 2, sharex=ax1)

    epochs = log['epoch'].values

    for column in ('loss', 'decision_loss', 'entailment_loss', 'span_loss'):
        if log[column].notna().any():
            ax1.plot(epochs, log[column].values, label=column)

    ax1.set_ylabel('Loss')
    ax1.legend()

    for column in ('train_micro', 'dev_micro', 'dev_macro'):
        if log[column].notna().any():
            ax2.plot(epochs, log[column].values, label=column)

    ax2.set_ylim(0, 1.05)
    ax2.set_xlabel('Epoch')
    ax2.set_ylabel('Accuracy')
    ax2.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax2.legend()

    return fig


def relation_histogram_plot(table, ax=None):
    """Bar chart of discourse relation counts

    Parameters
    ----------
    table : pandas.Series or pandas.DataFrame
        Counts indexed by relation, one column per split
    ax : matplotlib.axes.Axes, optional

    Returns
    -------
    matplotlib.axes.Axes

    """

    if ax is None:
        _, ax = plt.subplots()

    table.plot.bar(ax=ax)

    ax.set_xlabel('Relation')
    ax.set_ylabel('Count')

    return ax
