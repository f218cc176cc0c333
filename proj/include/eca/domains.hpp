#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eca/tensor.hpp"

namespace eca::domains {

// Pseudo-domain structure discovered by k-means over standardized
// (raw input ++ shallow feature) vectors. Immutable once built.
struct DomainModel {
    int k = 0;
    int dim = 0;                     // concatenated standardized dimension
    std::vector<double> centroids;   // [k x dim], standardized space
    std::vector<int> assignment;     // nearest centroid per sample
    std::vector<double> distance;    // [k x k], 1 + ||Ci-Cj|| / max_distance
    double max_distance = 0.0;       // maximum pairwise centroid distance
    std::vector<double> mean;        // standardization parameters used
    std::vector<double> scale;
    std::vector<double> lloyd_inertia;  // objective after each Lloyd sweep
};

// Distance matrix from raw centroid coordinates: unit diagonal, entries in
// [1,2]; a zero max distance collapses all off-diagonal entries to 1.
std::vector<double> distance_matrix(const std::vector<double>& centroids, int k, int dim,
                                    double* max_distance_out = nullptr);

// k-means with k-means++ seeding on the standardized concatenation of raw
// inputs and shallow features. At most 100 Lloyd sweeps or centroid shift
// below 1e-8; empty clusters are re-seeded at the point farthest from its
// assigned centroid. Deterministic per seed.
DomainModel cluster_domains(const Tensor& raw, const Tensor& shallow, int k, std::uint64_t seed);

double domain_distance(const DomainModel& model, int i_domain, int j_domain);

// Re-cluster fresh features, warm-starting Lloyd from the previous epoch's
// cluster memberships (their means in the freshly standardized space).
DomainModel refresh(const DomainModel& prev, const Tensor& raw, const Tensor& shallow,
                    std::uint64_t seed);

std::string to_json(const DomainModel& model);

}  // namespace eca::domains
