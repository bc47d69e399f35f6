#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "priceaudit/product.hpp"

namespace priceaudit {

/// Default bucket count for the fallback featurizer.
inline constexpr std::size_t kFallbackEmbeddingDim = 256;

/// Loads a catalog from a UTF-8 line-delimited file, one JSON object per
/// line with keys id, title, category, price, optional unit_price,
/// optional attributes (string->string map), optional embedding (array of
/// numbers). Unknown keys are ignored with a warning. Malformed records
/// report their line number.
Catalog load_catalog(const std::string& path);

/// Lowercase alphanumeric token runs of a title, in order of appearance.
std::vector<std::string> tokenize_title(const std::string& title);

/// Deterministic stand-in embedding: lowercase title tokens are hashed
/// (FNV-1a 64) into dim buckets, counts accumulated, then L2-normalized.
/// Identical titles yield bit-identical vectors across processes.
/// Requires dim >= 8; throws CatalogError on a title with no tokens.
std::vector<double> fallback_featurize(const Product& product, std::size_t dim = kFallbackEmbeddingDim);

/// Returns a copy of the catalog in which every product lacking an
/// embedding gets the fallback one. When the catalog already carries
/// supplied embeddings the fallback uses their dimension so the catalog
/// invariant holds; otherwise `dim` is used.
Catalog with_fallback_embeddings(const Catalog& catalog, std::size_t dim = kFallbackEmbeddingDim);

/// dot(a,b) / (|a||b|), in [-1, 1]. Throws CatalogError on dimension
/// mismatch or a zero-norm input.
double cosine(std::span<const double> a, std::span<const double> b);

/// The k most cosine-similar products to the target (target excluded),
/// sorted by similarity descending with ties broken by ascending product
/// id. k is clamped to catalog size - 1. Every considered product must
/// carry an embedding; throws CatalogError on an unknown target id.
std::vector<NeighborCandidate> knn_neighbors(const Catalog& catalog,
                                             const std::string& target_id,
                                             int k);

} // namespace priceaudit
