#include "fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace priceaudit::testing {

Product make_product(std::string id, std::string title, std::string category, double price,
                     std::map<std::string, std::string> attributes) {
    Product product;
    product.id = std::move(id);
    product.title = std::move(title);
    product.category = std::move(category);
    product.price = price;
    product.attributes = std::move(attributes);
    return product;
}

namespace {

const char* kGroupWords[] = {"aurora", "basalt", "cobalt", "dahlia", "ember", "fjord", "garnet",
                             "harbor", "indigo", "juniper", "krypton", "lumen", "meadow", "nimbus",
                             "onyx", "prairie", "quartz", "rowan", "saffron", "tundra"};

// mt19937 output is fully specified, so the jitter is identical on every
// platform and run.
double jitter(std::mt19937& gen) {
    return 0.9 + 0.2 * (static_cast<double>(gen()) / 4294967296.0);
}

} // namespace

PlantedCatalog make_planted_catalog(const PlantedSpec& spec) {
    if (spec.groups > 10)
        throw std::invalid_argument("planted fixture supports at most 10 groups");
    std::mt19937 gen(spec.seed);
    PlantedCatalog out;
    for (int g = 0; g < spec.groups; ++g) {
        const std::string w1 = kGroupWords[2 * g];
        const std::string w2 = kGroupWords[2 * g + 1];
        const std::string category = "category-" + w1;
        const double base_price = (20.0 + 13.0 * g) * spec.price_scale;
        const int base_watt = 400 + 35 * g;

        for (int i = 0; i < spec.members; ++i) {
            const int watt = base_watt + 10 * (i + 1);
            std::ostringstream title;
            title << w1 << " " << w2 << " unit " << i << " power " << watt;
            const std::string id = "g" + std::to_string(g) + "-n" + std::to_string(i);
            out.catalog.add(make_product(id, title.str(), category, base_price * jitter(gen),
                                         {{"brand", "brand-" + w1},
                                          {"power", std::to_string(watt)},
                                          {"quantity", "1"}}));
            out.normal_ids.push_back(id);
        }

        // Planted outlier: much pricier than every co-member, lowest spec.
        std::ostringstream title;
        title << w1 << " " << w2 << " unit 9 power " << base_watt;
        const std::string id = "g" + std::to_string(g) + "-outlier";
        out.catalog.add(make_product(id, title.str(), category, base_price * spec.outlier_ratio,
                                     {{"brand", "brand-" + w1},
                                      {"power", std::to_string(base_watt)},
                                      {"quantity", "1"}}));
        out.planted_ids.push_back(id);
    }
    return out;
}

Catalog make_mouse_veto_catalog() {
    Catalog catalog;
    catalog.add(make_product("mouse-target", "acme wireless mouse pro 8000 dpi", "wireless-mice",
                             150.0, {{"brand", "acme"}, {"dpi", "8000"}, {"quantity", "1"}}));
    catalog.add(make_product("mouse-pricier", "acme wireless mouse basic 4000 dpi", "wireless-mice",
                             180.0, {{"brand", "acme"}, {"dpi", "4000"}, {"quantity", "1"}}));
    return catalog;
}

Catalog make_mouse_voting_catalog() {
    Catalog catalog;
    catalog.add(make_product("mouse-target", "acme wireless mouse pro 8000 dpi", "wireless-mice",
                             150.0, {{"brand", "acme"}, {"dpi", "8000"}, {"quantity", "1"}}));
    const int better_dpi[] = {12000, 16000, 20000};
    for (int i = 0; i < 3; ++i) {
        catalog.add(make_product("mouse-better-" + std::to_string(i),
                                 "acme wireless mouse elite " + std::to_string(better_dpi[i]) + " dpi",
                                 "wireless-mice", 100.0,
                                 {{"brand", "acme"},
                                  {"dpi", std::to_string(better_dpi[i])},
                                  {"quantity", "1"}}));
    }
    const int worse_dpi[] = {2000, 3000};
    for (int i = 0; i < 2; ++i) {
        catalog.add(make_product("mouse-worse-" + std::to_string(i),
                                 "acme wireless mouse lite " + std::to_string(worse_dpi[i]) + " dpi",
                                 "wireless-mice", 200.0,
                                 {{"brand", "acme"},
                                  {"dpi", std::to_string(worse_dpi[i])},
                                  {"quantity", "1"}}));
    }
    return catalog;
}

TempDir::TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto candidate = base / ("priceaudit-test-" + std::to_string(std::random_device{}()));
        std::error_code ec;
        if (std::filesystem::create_directory(candidate, ec)) {
            path_ = candidate;
            return;
        }
    }
    throw std::runtime_error("cannot create temp directory");
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace priceaudit::testing
