#include "augscale/checkpoint_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "augscale/error.hpp"

using nlohmann::json;

namespace augscale {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'L', 'B', '0', '0', '0', '1'};

struct NamedTensor {
    std::string name;
    const Mat<float>* mat;
};

std::vector<NamedTensor> enumerate(const DinoCheckpoint& ck, const Mat<float>& center) {
    std::vector<NamedTensor> out;
    for (const auto& [name, mat] : ck.student.named_tensors())
        out.push_back({"student." + name, mat});
    for (const auto& [name, mat] : ck.teacher.named_tensors())
        out.push_back({"teacher." + name, mat});
    out.push_back({"center", &center});
    return out;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw DataError("checkpoint: truncated header length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const DinoCheckpoint& ck, const std::string& path) {
    Mat<float> center(1, static_cast<int>(ck.center.size()));
    for (std::size_t i = 0; i < ck.center.size(); ++i) center(0, i) = ck.center[i];
    const auto tensors = enumerate(ck, center);

    json header;
    header["config"] = json::parse(dino_config_to_json(ck.config));
    json log = json::array();
    for (const EpochLog& e : ck.log)
        log.push_back({{"epoch", e.epoch},
                       {"mean_loss", e.mean_loss},
                       {"teacher_entropy", e.teacher_entropy},
                       {"wall_seconds", e.wall_seconds}});
    header["log"] = log;
    json tensor_list = json::array();
    std::uint64_t offset = 0;
    for (const auto& t : tensors) {
        tensor_list.push_back({{"name", t.name},
                               {"rows", t.mat->rows},
                               {"cols", t.mat->cols},
                               {"offset", offset}});
        offset += t.mat->size() * sizeof(float);
    }
    header["tensors"] = tensor_list;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_u64(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& t : tensors)
        out.write(reinterpret_cast<const char*>(t.mat->v.data()),
                  static_cast<std::streamsize>(t.mat->size() * sizeof(float)));
    if (!out) throw DataError("cannot write checkpoint: " + path);
}

DinoCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    const std::uint64_t header_len = read_u64(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw DataError("checkpoint: truncated header in " + path);

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed header JSON: ") + e.what());
    }

    DinoCheckpoint ck;
    ck.config = dino_config_from_json(header.at("config").dump());
    for (const auto& e : header.at("log"))
        ck.log.push_back({e.at("epoch").get<int>(), e.at("mean_loss").get<double>(),
                          e.at("teacher_entropy").get<double>(),
                          e.at("wall_seconds").get<double>()});

    ck.student = init_encoder(ck.config.encoder, 0);  // shapes; payload overwrites
    ck.teacher = ck.student;
    ck.center.assign(ck.config.encoder.out_dim, 0.0f);

    auto student_named = ck.student.named_tensors();
    auto teacher_named = ck.teacher.named_tensors();
    Mat<float> center(1, static_cast<int>(ck.center.size()));

    const std::streampos payload_start = in.tellg();
    for (const auto& t : header.at("tensors")) {
        const std::string name = t.at("name").get<std::string>();
        const int rows = t.at("rows").get<int>();
        const int cols = t.at("cols").get<int>();
        const std::uint64_t offset = t.at("offset").get<std::uint64_t>();
        Mat<float>* dst = nullptr;
        if (name == "center") {
            dst = &center;
        } else {
            auto& group = name.rfind("student.", 0) == 0 ? student_named : teacher_named;
            const std::string local = name.substr(name.find('.') + 1);
            for (auto& [n, mat] : group)
                if (n == local) dst = mat;
        }
        if (!dst) throw DataError("checkpoint: unknown tensor '" + name + "' in " + path);
        if (dst->rows != rows || dst->cols != cols)
            throw DataError("checkpoint: shape mismatch for tensor '" + name + "' in " + path);
        in.seekg(payload_start + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(dst->v.data()),
                static_cast<std::streamsize>(dst->size() * sizeof(float)));
        if (!in) throw DataError("checkpoint: truncated payload for '" + name + "' in " + path);
    }
    for (std::size_t i = 0; i < ck.center.size(); ++i) ck.center[i] = center(0, i);
    return ck;
}

}  // namespace augscale
