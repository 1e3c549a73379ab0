#include "vxw/config.hpp"

#include <charconv>
#include <sstream>

#include "vxw/binio.hpp"
#include "vxw/errors.hpp"

namespace vxw {

namespace {

std::string render_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error("config: bad number '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error("config: bad integer '" + s + "'");
    return v;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

template <typename T, typename Parse>
std::string render_list(const std::vector<T>& v, Parse&& render) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += render(v[i]);
    }
    return out;
}

}  // namespace

std::string render_config(const PipelineConfig& c) {
    std::string out;
    const auto line = [&out](const std::string& key, const std::string& value) {
        out += key;
        out += ' ';
        out += value;
        out += '\n';
    };
    line("patch_size", std::to_string(c.patch_size));
    line("stride", std::to_string(c.stride));
    line("widths", render_list(c.widths, [](std::size_t w) { return std::to_string(w); }));
    line("corruption_pretrain", render_list(c.corruption_pretrain, render_double));
    line("corruption_finetune", render_double(c.corruption_finetune));
    line("alpha", render_double(c.alpha));
    line("nu", render_double(c.nu));
    line("p_value", render_double(c.p_value));
    line("min_cluster_size", std::to_string(c.min_cluster_size));
    line("gamma_scale", render_double(c.gamma_scale));
    line("lr_pretrain", render_double(c.lr_pretrain));
    line("lr_finetune", render_double(c.lr_finetune));
    line("batch_size", std::to_string(c.batch_size));
    line("epochs_pretrain", std::to_string(c.epochs_pretrain));
    line("epochs_finetune", std::to_string(c.epochs_finetune));
    line("n_pairs", std::to_string(c.n_pairs));
    line("seed", std::to_string(c.seed));
    return out;
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig c;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        if (raw.empty() || raw[0] == '#') continue;
        const auto sp = raw.find(' ');
        if (sp == std::string::npos) throw Error("config: malformed line '" + raw + "'");
        const std::string key = raw.substr(0, sp);
        const std::string value = raw.substr(sp + 1);
        if (key == "patch_size") {
            c.patch_size = static_cast<std::uint32_t>(parse_u64(value));
        } else if (key == "stride") {
            c.stride = static_cast<std::uint32_t>(parse_u64(value));
        } else if (key == "widths") {
            c.widths.clear();
            for (const auto& tok : split_commas(value))
                c.widths.push_back(static_cast<std::size_t>(parse_u64(tok)));
        } else if (key == "corruption_pretrain") {
            c.corruption_pretrain.clear();
            for (const auto& tok : split_commas(value))
                c.corruption_pretrain.push_back(parse_double(tok));
        } else if (key == "corruption_finetune") {
            c.corruption_finetune = parse_double(value);
        } else if (key == "alpha") {
            c.alpha = parse_double(value);
        } else if (key == "nu") {
            c.nu = parse_double(value);
        } else if (key == "p_value") {
            c.p_value = parse_double(value);
        } else if (key == "min_cluster_size") {
            c.min_cluster_size = static_cast<std::size_t>(parse_u64(value));
        } else if (key == "gamma_scale") {
            c.gamma_scale = parse_double(value);
        } else if (key == "lr_pretrain") {
            c.lr_pretrain = parse_double(value);
        } else if (key == "lr_finetune") {
            c.lr_finetune = parse_double(value);
        } else if (key == "batch_size") {
            c.batch_size = static_cast<std::size_t>(parse_u64(value));
        } else if (key == "epochs_pretrain") {
            c.epochs_pretrain = static_cast<std::size_t>(parse_u64(value));
        } else if (key == "epochs_finetune") {
            c.epochs_finetune = static_cast<std::size_t>(parse_u64(value));
        } else if (key == "n_pairs") {
            c.n_pairs = static_cast<std::size_t>(parse_u64(value));
        } else if (key == "seed") {
            c.seed = parse_u64(value);
        } else {
            throw Error("config: unknown key '" + key + "'");
        }
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return parse_config(std::string(bytes.begin(), bytes.end()));
}

std::string config_hash(const PipelineConfig& c) {
    const std::string text = render_config(c);
    return fnv1a_hex(text.data(), text.size());
}

std::string lineage_hash(const PipelineConfig& c) {
    PipelineConfig pinned = c;
    pinned.p_value = 0.0;
    pinned.min_cluster_size = 0;
    const std::string text = render_config(pinned);
    return fnv1a_hex(text.data(), text.size());
}

std::string manifest_path(const std::string& artifact_path) {
    return artifact_path + ".manifest";
}

void write_manifest(const std::string& artifact_path, const Manifest& m) {
    std::string out = "command " + m.command + "\n";
    for (const auto& [key, value] : m.fields) out += key + " " + value + "\n";
    write_file_atomic(manifest_path(artifact_path), out);
}

Manifest read_manifest(const std::string& artifact_path) {
    const auto bytes = read_file_bytes(manifest_path(artifact_path));
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    Manifest m;
    std::string raw;
    while (std::getline(in, raw)) {
        if (raw.empty()) continue;
        const auto sp = raw.find(' ');
        if (sp == std::string::npos) throw Error("manifest: malformed line '" + raw + "'");
        const std::string key = raw.substr(0, sp);
        const std::string value = raw.substr(sp + 1);
        if (key == "command")
            m.command = value;
        else
            m.fields[key] = value;
    }
    return m;
}

}  // namespace vxw
