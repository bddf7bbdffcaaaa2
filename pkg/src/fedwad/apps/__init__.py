from .coreset import (
    ClientPool,
    Coreset,
    coreset_fit,
    coreset_fit_federated,
    knn1_classify,
    label_coreset,
)
from .otdd import DistanceMatrix, otdd_distance, otdd_featurize, pairwise_distance_matrix
from .clustering import cluster_affinity, jacobi_eigh, kmeans, spectral_cluster
