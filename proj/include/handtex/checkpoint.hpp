#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "handtex/tensor.hpp"

namespace handtex {

// Versioned container of named arrays: a text header (one line per array with
// name, dtype, shape and byte offset into the blob) followed by raw
// little-endian values. Round-trips bit-exactly.
class Checkpoint {
public:
    struct Entry {
        Shape shape;
        std::string dtype;  // "f32" or "f64"
        std::vector<unsigned char> bytes;
    };

    template <class T>
    void put(const std::string& name, const Tensor<T>& t) {
        Entry e;
        e.shape = t.shape();
        e.dtype = sizeof(T) == 4 ? "f32" : "f64";
        e.bytes.resize(t.size() * sizeof(T));
        std::memcpy(e.bytes.data(), t.values().data(), e.bytes.size());
        entries_[name] = std::move(e);
    }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    template <class T>
    Tensor<T> get(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end())
            throw std::runtime_error("checkpoint: missing array '" + name + "'");
        const Entry& e = it->second;
        const std::string want = sizeof(T) == 4 ? "f32" : "f64";
        if (e.dtype != want)
            throw std::runtime_error("checkpoint: array '" + name + "' is " + e.dtype +
                                     ", requested " + want);
        std::vector<T> vals(e.bytes.size() / sizeof(T));
        std::memcpy(vals.data(), e.bytes.data(), e.bytes.size());
        return Tensor<T>(e.shape, std::move(vals));
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }

    void save(const std::string& path) const {
        std::ostringstream header;
        header << "HTCKPT 1\n";
        std::size_t offset = 0;
        for (const auto& [name, e] : entries_) {
            header << "array " << name << " " << e.dtype << " " << e.shape.size();
            for (auto d : e.shape) header << " " << d;
            header << " " << offset << "\n";
            offset += e.bytes.size();
        }
        header << "end\n";
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
        const std::string h = header.str();
        f.write(h.data(), std::streamsize(h.size()));
        for (const auto& [name, e] : entries_)
            f.write(reinterpret_cast<const char*>(e.bytes.data()), std::streamsize(e.bytes.size()));
        if (!f) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
        std::string line;
        if (!std::getline(f, line) || line != "HTCKPT 1")
            throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
        struct Pending {
            std::string name;
            Shape shape;
            std::string dtype;
            std::size_t offset;
        };
        std::vector<Pending> pend;
        while (std::getline(f, line)) {
            if (line == "end") break;
            std::istringstream ls(line);
            std::string kw;
            Pending p;
            std::size_t ndims;
            ls >> kw >> p.name >> p.dtype >> ndims;
            p.shape.resize(ndims);
            for (auto& d : p.shape) ls >> d;
            ls >> p.offset;
            if (kw != "array" || !ls)
                throw std::runtime_error("checkpoint: malformed header line: " + line);
            pend.push_back(std::move(p));
        }
        const std::streampos blob_start = f.tellg();
        Checkpoint ck;
        for (const auto& p : pend) {
            const std::size_t esize = p.dtype == "f32" ? 4 : 8;
            Entry e;
            e.shape = p.shape;
            e.dtype = p.dtype;
            e.bytes.resize(shape_numel(p.shape) * esize);
            f.seekg(blob_start + std::streamoff(p.offset));
            f.read(reinterpret_cast<char*>(e.bytes.data()), std::streamsize(e.bytes.size()));
            if (!f) throw std::runtime_error("checkpoint: truncated blob in '" + path + "'");
            ck.entries_[p.name] = std::move(e);
        }
        return ck;
    }

private:
    std::map<std::string, Entry> entries_;
};

}  // namespace handtex
