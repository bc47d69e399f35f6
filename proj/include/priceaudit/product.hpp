#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace priceaudit {

/// Error raised for invalid catalog data (bad records, broken invariants).
class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One catalog entry. Prices are in currency units and must be positive.
/// The embedding, when present, must match the catalog-wide dimension and
/// have nonzero norm.
struct Product {
    std::string id;
    std::string title;
    std::string category;
    double price = 0.0;
    std::optional<double> unit_price;
    std::map<std::string, std::string> attributes;
    std::optional<std::vector<double>> embedding;
};

/// Validates a single product's own invariants; throws CatalogError.
void validate_product(const Product& product);

/// A candidate returned by similarity retrieval. Ranks are 1-based and
/// consecutive; lists are sorted by similarity descending.
struct NeighborCandidate {
    std::string product_id;
    double similarity = 0.0;
    int rank = 0;
};

/// Immutable-after-load product collection with id lookup.
/// All embedded products share one dimension.
class Catalog {
public:
    Catalog() = default;

    /// Adds a product, enforcing id uniqueness and embedding consistency.
    void add(Product product);

    const Product* find(const std::string& id) const;
    const Product& at(const std::string& id) const;
    bool contains(const std::string& id) const { return find(id) != nullptr; }

    const std::vector<Product>& products() const { return products_; }
    std::size_t size() const { return products_.size(); }
    bool empty() const { return products_.empty(); }

    /// Dimension shared by all embedded products, if any are embedded.
    std::optional<std::size_t> embedding_dim() const { return embedding_dim_; }

    /// Loader warnings (unknown keys etc.) collected while building.
    const std::vector<std::string>& warnings() const { return warnings_; }
    void add_warning(std::string message) { warnings_.push_back(std::move(message)); }

private:
    std::vector<Product> products_;
    std::unordered_map<std::string, std::size_t> index_;
    std::optional<std::size_t> embedding_dim_;
    std::vector<std::string> warnings_;
};

} // namespace priceaudit
