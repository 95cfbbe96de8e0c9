"""Train on a UI-collected label dataset and report agreement with truth.

Usage: train_check.py <labels.csv> <cloud.ply> <point_labels.csv>
Prints one line: "agreement=<fraction> rows=<n>".
"""
import sys

import numpy as np

from fallcolor import gboost, pcio
from fallcolor.core import LABEL_CODES, FeatureSchema


def main() -> int:
    dataset_path, cloud_path, truth_path = sys.argv[1:4]
    dataset = pcio.read_label_dataset(dataset_path)  # validates every row
    cloud = pcio.read_cloud(cloud_path)
    truth = np.empty(cloud.n_points, dtype=np.uint8)
    for line in open(truth_path).read().splitlines()[1:]:
        idx, name = line.split(",")
        truth[int(idx)] = LABEL_CODES[name]

    model, _, _ = gboost.train(dataset, FeatureSchema(),
                               gboost.GbmHyperparams(seed=3), split_fraction=0.8)
    classified = gboost.classify_gbm(cloud, model)
    agreement = float(np.mean(classified.labels == truth))
    print(f"agreement={agreement} rows={len(dataset)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
