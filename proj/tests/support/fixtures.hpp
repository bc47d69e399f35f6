#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "priceaudit/catalog.hpp"
#include "priceaudit/product.hpp"

namespace priceaudit::testing {

Product make_product(std::string id, std::string title, std::string category, double price,
                     std::map<std::string, std::string> attributes = {});

/// Synthetic catalog of `groups` categories, each holding one planted
/// outlier (priced `outlier_ratio` times the group base, lowest specs)
/// plus `members` normally priced products (within +-10% of base,
/// equal-or-better specs than the planted one). Titles share four group
/// tokens so the fallback featurizer retrieves co-members first.
struct PlantedSpec {
    int groups = 10;
    int members = 5;
    double outlier_ratio = 2.5;
    double price_scale = 1.0;
    unsigned seed = 7;
};

struct PlantedCatalog {
    Catalog catalog;
    std::vector<std::string> planted_ids;
    std::vector<std::string> normal_ids;
};

PlantedCatalog make_planted_catalog(const PlantedSpec& spec = {});

/// $150 wireless mouse ("mouse-target") with a single inferior $180
/// neighbor: the worse-pricier veto case.
Catalog make_mouse_veto_catalog();

/// $150 wireless mouse ("mouse-target") with three better mice at $100
/// and two worse mice at $200: the quadrant-voting case (flagged at 30%
/// padding).
Catalog make_mouse_voting_catalog();

/// Temp directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

} // namespace priceaudit::testing
