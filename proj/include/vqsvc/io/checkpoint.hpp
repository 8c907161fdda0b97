#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqsvc/hier/module.hpp"
#include "vqsvc/hier/train.hpp"
#include "vqsvc/io/config.hpp"
#include "vqsvc/nn/adam.hpp"

namespace vqsvc::io {

// Model snapshot as a directory:
//
//   <ckpt>/manifest.json        format version, scale tag, module topology,
//                               singer roster, training config, iteration
//                               counter, tensor index, optimizer sizes
//   <ckpt>/tensors/NNNN_*.bin   one file per tensor: 8-byte magic, uint64
//                               rows, uint64 cols, row-major float32 payload
//   <ckpt>/optimizer/adam_*.bin first/second moments, same binary framing
//
// Plain text plus flat binary files keeps the format language-agnostic and
// diffable. The whole tree is staged under <ckpt>.tmp and renamed into
// place, so a crash never leaves a half-written checkpoint behind.

inline constexpr char kTensorMagic[8] = {'V', 'Q', 'T', 'E', 'N', 'S', '1', '\n'};
inline constexpr int kCkptFormatVersion = 1;

namespace detail {

inline std::string tensor_file_name(std::size_t index, const std::string& name) {
    char prefix[8];
    std::snprintf(prefix, sizeof prefix, "%04zu", index);
    std::string sanitized = name;
    for (char& c : sanitized)
        if (c == '/' || c == '.') c = '_';
    return std::string(prefix) + "_" + sanitized + ".bin";
}

inline void write_f32_file(const std::filesystem::path& p, std::uint64_t rows,
                           std::uint64_t cols, const std::vector<float>& payload) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    require(bool(out), ErrorCategory::io_error, "cannot write " + p.string());
    out.write(kTensorMagic, sizeof kTensorMagic);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    require(bool(out), ErrorCategory::io_error, "failed writing " + p.string());
}

inline std::vector<float> read_f32_file(const std::filesystem::path& p, std::uint64_t want_rows,
                                        std::uint64_t want_cols) {
    std::ifstream in(p, std::ios::binary);
    require(bool(in), ErrorCategory::io_error, "checkpoint tensor file missing: " + p.string());
    char magic[sizeof kTensorMagic];
    in.read(magic, sizeof magic);
    require(bool(in) && std::equal(magic, magic + sizeof magic, kTensorMagic),
            ErrorCategory::io_error, "not a checkpoint tensor file: " + p.string());
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    require(bool(in) && rows == want_rows && cols == want_cols, ErrorCategory::io_error,
            "tensor shape mismatch in " + p.string());
    std::vector<float> payload(rows * cols);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    require(bool(in), ErrorCategory::io_error, "truncated tensor file: " + p.string());
    return payload;
}

template <class T>
void write_tensor(const std::filesystem::path& p, const nn::ParamRef<T>& r) {
    // Buffers are column-major in memory; files store row-major.
    std::vector<float> payload;
    payload.reserve(static_cast<size_t>(r.size()));
    for (long i = 0; i < r.rows; ++i)
        for (long j = 0; j < r.cols; ++j)
            payload.push_back(static_cast<float>(r.value[j * r.rows + i]));
    write_f32_file(p, static_cast<std::uint64_t>(r.rows), static_cast<std::uint64_t>(r.cols),
                   payload);
}

template <class T>
void read_tensor(const std::filesystem::path& p, const nn::ParamRef<T>& r) {
    const auto payload =
        read_f32_file(p, static_cast<std::uint64_t>(r.rows), static_cast<std::uint64_t>(r.cols));
    for (long i = 0; i < r.rows; ++i)
        for (long j = 0; j < r.cols; ++j)
            r.value[j * r.rows + i] = static_cast<T>(payload[i * r.cols + j]);
}

inline nlohmann::json read_manifest(const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path dir(path);
    require(fs::exists(dir), ErrorCategory::missing_file, "cannot open checkpoint: " + path);
    require(fs::is_directory(dir), ErrorCategory::io_error,
            "not a checkpoint directory: " + path);
    std::ifstream in(dir / "manifest.json");
    require(bool(in), ErrorCategory::missing_file,
            "checkpoint has no manifest.json: " + path);
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        require(j.at("format_version").get<int>() == kCkptFormatVersion, ErrorCategory::io_error,
                "unsupported checkpoint format version");
        return j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::io_error, "corrupt checkpoint manifest: " + std::string(e.what()));
    }
}

}  // namespace detail

template <class T>
void save_checkpoint(const std::string& path, hier::VqModule<T>& m,
                     const hier::TrainingConfig& train_cfg, long iteration,
                     nn::Adam<T>* opt = nullptr) {
    namespace fs = std::filesystem;
    nn::ParamSet<T> ps;
    m.collect_state(ps);

    nlohmann::json manifest;
    manifest["format_version"] = kCkptFormatVersion;
    manifest["scale"] = m.spec().scale;
    manifest["iteration"] = iteration;
    manifest["trained"] = m.trained();
    manifest["singer_ids"] = m.singers().ids();
    manifest["module_spec"] = nlohmann::json::parse(module_spec_to_json(m.spec()));
    manifest["training_config"] = nlohmann::json::parse(training_config_to_json(train_cfg));
    nlohmann::json tensors = nlohmann::json::array();
    for (std::size_t i = 0; i < ps.refs().size(); ++i) {
        const auto& r = ps.refs()[i];
        tensors.push_back({{"name", r.name},
                           {"rows", r.rows},
                           {"cols", r.cols},
                           {"file", detail::tensor_file_name(i, r.name)}});
    }
    manifest["tensors"] = std::move(tensors);
    if (opt)
        manifest["optimizer"] = {{"step_count", opt->step_count()},
                                 {"m_size", opt->moment1().size()},
                                 {"v_size", opt->moment2().size()}};

    const fs::path tmp(path + ".tmp");
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp / "tensors");
    require(fs::is_directory(tmp / "tensors"), ErrorCategory::io_error,
            "cannot create checkpoint staging directory: " + tmp.string());
    for (std::size_t i = 0; i < ps.refs().size(); ++i)
        detail::write_tensor(tmp / "tensors" / detail::tensor_file_name(i, ps.refs()[i].name),
                             ps.refs()[i]);
    if (opt) {
        fs::create_directories(tmp / "optimizer");
        auto dump = [&](const char* name, const std::vector<T>& mom) {
            std::vector<float> payload(mom.begin(), mom.end());
            detail::write_f32_file(tmp / "optimizer" / name, payload.size(), 1, payload);
        };
        dump("adam_m.bin", opt->moment1());
        dump("adam_v.bin", opt->moment2());
    }
    {
        std::ofstream out(tmp / "manifest.json", std::ios::trunc);
        require(bool(out), ErrorCategory::io_error, "cannot write checkpoint manifest");
        out << manifest.dump(2) << '\n';
        require(bool(out), ErrorCategory::io_error, "failed writing checkpoint manifest");
    }
    fs::remove_all(path, ec);
    std::error_code ec2;
    fs::rename(tmp, path, ec2);
    require(!ec2, ErrorCategory::io_error, "cannot move checkpoint into place: " + ec2.message());
}

struct CheckpointInfo {
    int format_version = 0;
    std::string scale;
    long iteration = 0;
    bool trained = false;
    std::vector<std::string> singer_ids;
    hier::ModuleSpec spec;
    hier::TrainingConfig train_cfg;
    bool has_optimizer = false;
};

namespace detail {

inline CheckpointInfo info_from_manifest(const nlohmann::json& j) {
    CheckpointInfo info;
    try {
        info.format_version = j.at("format_version").get<int>();
        info.scale = j.at("scale").get<std::string>();
        info.iteration = j.at("iteration").get<long>();
        info.trained = j.at("trained").get<bool>();
        info.singer_ids = j.at("singer_ids").get<std::vector<std::string>>();
        info.spec = parse_module_spec(j.at("module_spec").dump());
        info.train_cfg = parse_training_config(j.at("training_config").dump());
        info.has_optimizer = j.contains("optimizer");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::io_error, "incomplete checkpoint manifest: " + std::string(e.what()));
    }
    return info;
}

}  // namespace detail

// Reads just the manifest (cheap; no tensor data).
inline CheckpointInfo read_checkpoint_info(const std::string& path) {
    return detail::info_from_manifest(detail::read_manifest(path));
}

// Restores tensors (and optimizer state when both sides have it) into a
// module whose topology must match the manifest exactly.
template <class T>
CheckpointInfo load_checkpoint(const std::string& path, hier::VqModule<T>& m,
                               nn::Adam<T>* opt = nullptr) {
    namespace fs = std::filesystem;
    const nlohmann::json j = detail::read_manifest(path);

    nn::ParamSet<T> ps;
    m.collect_state(ps);
    const auto& tensors = j.at("tensors");
    require(tensors.is_array() && tensors.size() == ps.refs().size(), ErrorCategory::io_error,
            "checkpoint tensor count does not match this model");
    const fs::path dir(path);
    for (std::size_t i = 0; i < ps.refs().size(); ++i) {
        const auto& r = ps.refs()[i];
        const auto& t = tensors[i];
        require(t.at("name").get<std::string>() == r.name &&
                    t.at("rows").get<long>() == r.rows && t.at("cols").get<long>() == r.cols,
                ErrorCategory::io_error,
                "checkpoint tensor mismatch at '" + r.name + "' (topology differs)");
        detail::read_tensor(dir / "tensors" / t.at("file").get<std::string>(), r);
    }

    if (opt && j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        const auto ms = o.at("m_size").get<std::uint64_t>();
        const auto vs = o.at("v_size").get<std::uint64_t>();
        const auto m1 = detail::read_f32_file(dir / "optimizer" / "adam_m.bin", ms, 1);
        const auto m2 = detail::read_f32_file(dir / "optimizer" / "adam_v.bin", vs, 1);
        opt->moment1().assign(m1.begin(), m1.end());
        opt->moment2().assign(m2.begin(), m2.end());
        opt->set_step_count(o.at("step_count").get<long>());
    }

    CheckpointInfo info = detail::info_from_manifest(j);
    m.set_trained(info.trained);
    return info;
}

// Builds a module straight from a checkpoint's own manifest. Parameters are
// loaded; singer roster and topology come from the file.
template <class T>
hier::VqModule<T> module_from_checkpoint(const std::string& path, CheckpointInfo* info_out = nullptr) {
    CheckpointInfo info = read_checkpoint_info(path);
    hier::VqModule<T> m(info.spec, info.singer_ids);
    CheckpointInfo full = load_checkpoint(path, m);
    if (info_out) *info_out = full;
    return m;
}

}  // namespace vqsvc::io
