"""Independent brute-force metric implementations (plain Python loops)."""

import math


def auc_pairs(truths, scores):
    pos = [s for t, s in zip(truths, scores) if t == 1]
    neg = [s for t, s in zip(truths, scores) if t != 1]
    if not pos or not neg:
        return None
    credit = 0.0
    for a in pos:
        for b in neg:
            credit += 1.0 if a > b else 0.5 if a == b else 0.0
    return credit / (len(pos) * len(neg))


def _div(a, b):
    return a / b if b else 0.0


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r else 0.0


def binary_oracle(truths, scores, threshold=0.5):
    tp = tn = fp = fn = 0
    for t, s in zip(truths, scores):
        pred = 1 if s >= threshold else 0
        if pred == 1 and t == 1:
            tp += 1
        elif pred == 0 and t == 0:
            tn += 1
        elif pred == 1:
            fp += 1
        else:
            fn += 1
    prec, rec, spec = _div(tp, tp + fp), _div(tp, tp + fn), _div(tn, tn + fp)
    return {
        "accuracy": (tp + tn) / len(truths),
        "auc": auc_pairs(truths, scores),
        "precision": prec,
        "recall": rec,
        "sensitivity": rec,
        "specificity": spec,
        "f1": _f1(prec, rec),
        "balanced_accuracy": (rec + spec) / 2,
    }


def multiclass_oracle(truths, prob_rows):
    k = len(prob_rows[0])
    preds = [max(range(k), key=lambda c: (row[c], -c)) for row in prob_rows]
    tally = [[0] * k for _ in range(k)]
    for t, p in zip(truths, preds):
        tally[t][p] += 1
    n = len(truths)
    tp = [tally[c][c] for c in range(k)]
    support = [sum(tally[c]) for c in range(k)]
    predicted = [sum(tally[r][c] for r in range(k)) for c in range(k)]
    prec = [_div(tp[c], predicted[c]) for c in range(k)]
    rec = [_div(tp[c], support[c]) for c in range(k)]
    f1 = [_f1(p, r) for p, r in zip(prec, rec)]
    w = [s / n for s in support]
    micro_p, micro_r = _div(sum(tp), sum(predicted)), _div(sum(tp), sum(support))
    return {
        "accuracy": sum(tp) / n,
        "precision_micro": micro_p,
        "recall_micro": micro_r,
        "f1_micro": _f1(micro_p, micro_r),
        "precision_macro": sum(prec) / k,
        "recall_macro": sum(rec) / k,
        "f1_macro": sum(f1) / k,
        "precision_weighted": sum(a * b for a, b in zip(w, prec)),
        "recall_weighted": sum(a * b for a, b in zip(w, rec)),
        "f1_weighted": sum(a * b for a, b in zip(w, f1)),
    }


def regression_oracle(truths, preds):
    n = len(truths)
    resid = [t - p for t, p in zip(truths, preds)]
    mse = sum(r * r for r in resid) / n
    mean_t = sum(truths) / n
    sst = sum((t - mean_t) ** 2 for t in truths)
    mean_r = sum(resid) / n
    return {
        "mse": mse,
        "rmse": math.sqrt(mse),
        "mae": sum(abs(r) for r in resid) / n,
        "r2": None if sst == 0 else 1 - sum(r * r for r in resid) / sst,
        "mad": sum(abs(r - mean_r) for r in resid) / n,
    }


def close(a, b, tol=1e-9):
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= tol
