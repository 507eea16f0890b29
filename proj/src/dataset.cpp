#include "augscale/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "augscale/error.hpp"
#include "augscale/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace augscale {

void write_dataset_dir(const LabeledDataset& ds, const std::string& dir) {
    if (ds.labels.size() != ds.dataset.size())
        throw DataError("dataset/label length mismatch");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw DataError("cannot create dataset directory: " + dir);

    json items = json::array();
    for (std::size_t i = 0; i < ds.dataset.size(); ++i) {
        const Image& img = ds.dataset.images[i];
        char name[32];
        std::snprintf(name, sizeof(name), "img_%06lld.%s",
                      static_cast<long long>(ds.dataset.source_ids[i]),
                      img.channels == 1 ? "pgm" : "ppm");
        save_image(img, (fs::path(dir) / name).string());
        items.push_back({{"file", std::string(name)},
                         {"label", ds.labels[i]},
                         {"id", ds.dataset.source_ids[i]}});
    }
    json manifest = {{"classes", ds.class_count}, {"items", items}};
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
    if (!out) throw DataError("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

LabeledDataset load_dataset_dir(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw DataError("missing manifest.json in " + dir);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw DataError("malformed manifest.json in " + dir + ": " + e.what());
    }
    LabeledDataset ds;
    try {
        ds.class_count = manifest.at("classes").get<int>();
        for (const auto& item : manifest.at("items")) {
            ds.dataset.images.push_back(
                load_image((fs::path(dir) / item.at("file").get<std::string>()).string()));
            ds.dataset.source_ids.push_back(item.at("id").get<std::int64_t>());
            ds.labels.push_back(item.at("label").get<int>());
        }
    } catch (const json::exception& e) {
        throw DataError("manifest.json missing fields in " + dir + ": " + e.what());
    }
    if (ds.dataset.images.empty()) throw DataError("empty dataset in " + dir);
    return ds;
}

SplitResult split_stratified(const LabeledDataset& ds, SplitFractions f, std::uint64_t seed) {
    if (f.train <= 0.0 || f.val <= 0.0 || f.test <= 0.0)
        throw UsageError("zero-fraction split refused: all fractions must be positive");
    if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
        throw UsageError("split fractions must sum to 1");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

    SplitResult out;
    out.train.class_count = out.val.class_count = out.test.class_count = ds.class_count;

    for (auto& [cls, idx] : by_class) {
        if (idx.size() < 3)
            throw DataError("class " + std::to_string(cls) + " too small to stratify (" +
                            std::to_string(idx.size()) + " items)");
        RngStream rng(seed, 0x5B117000u + static_cast<std::uint64_t>(cls));
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.next_below(i + 1)]);

        const double n = static_cast<double>(idx.size());
        std::size_t n_train = static_cast<std::size_t>(std::llround(f.train * n));
        std::size_t n_val =
            static_cast<std::size_t>(std::llround((f.train + f.val) * n)) - n_train;
        n_train = std::max<std::size_t>(n_train, 1);
        n_val = std::max<std::size_t>(n_val, 1);
        if (n_train + n_val >= idx.size()) {
            // keep at least one item in test
            if (n_val > 1) --n_val;
            if (n_train + n_val >= idx.size()) n_train = idx.size() - n_val - 1;
        }
        auto push = [&](LabeledDataset& part, std::size_t i) {
            part.dataset.images.push_back(ds.dataset.images[i]);
            part.dataset.source_ids.push_back(ds.dataset.source_ids[i]);
            part.labels.push_back(ds.labels[i]);
        };
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k < n_train)
                push(out.train, idx[k]);
            else if (k < n_train + n_val)
                push(out.val, idx[k]);
            else
                push(out.test, idx[k]);
        }
    }
    return out;
}

}  // namespace augscale
