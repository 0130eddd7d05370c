//! Binary model files.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! magic "CMXPARSE" | u32 version
//! u64 length | JSON parser configuration
//! word, POS and label lists: u64 count, then u64 length + UTF-8 each
//! u64 cluster count | u8 has map | [u64 entries, (string, u32 id) each]
//! u64 parameter count, then per parameter:
//!     name string | u8 trainable | u64 rows | u64 cols | rows*cols f64
//! ```

use std::collections::HashMap;
use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::resources::ClusterMap;

use super::model::{Layout, ParserModel};
use super::params::ParamStore;
use super::vocab::{Indexer, Vocab};
use super::{ParserConfig, ParserError};

const MAGIC: &[u8; 8] = b"CMXPARSE";
pub const MODEL_VERSION: u32 = 1;

/// Upper bound for declared lengths, to fail fast on garbage.
const MAX_LEN: u64 = 1 << 32;

fn write_str<W: Write>(write: &mut W, s: &str) -> io::Result<()> {
    write.write_u64::<LittleEndian>(s.len() as u64)?;
    write.write_all(s.as_bytes())
}

fn write_list<W: Write>(write: &mut W, items: &[String]) -> io::Result<()> {
    write.write_u64::<LittleEndian>(items.len() as u64)?;
    for item in items {
        write_str(write, item)?;
    }
    Ok(())
}

pub fn save_model<W: Write>(model: &ParserModel, mut write: W) -> Result<(), ParserError> {
    let w = &mut write;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(MODEL_VERSION)?;

    let config =
        serde_json::to_string(&model.config).map_err(|err| ParserError::Config(err.to_string()))?;
    write_str(w, &config)?;

    write_list(w, model.vocab.words.items())?;
    write_list(w, model.vocab.pos.items())?;
    write_list(w, model.vocab.labels.items())?;

    w.write_u64::<LittleEndian>(model.vocab.cluster_count as u64)?;
    match &model.vocab.clusters {
        Some(map) => {
            w.write_u8(1)?;
            w.write_u64::<LittleEndian>(map.count() as u64)?;
            let entries = map.entries();
            w.write_u64::<LittleEndian>(entries.len() as u64)?;
            for (word, id) in entries {
                write_str(w, word)?;
                w.write_u32::<LittleEndian>(id)?;
            }
        }
        None => w.write_u8(0)?,
    }

    let params = model.params.params();
    w.write_u64::<LittleEndian>(params.len() as u64)?;
    for param in params {
        write_str(w, &param.name)?;
        w.write_u8(param.trainable as u8)?;
        let (rows, cols) = param.value.dim();
        w.write_u64::<LittleEndian>(rows as u64)?;
        w.write_u64::<LittleEndian>(cols as u64)?;
        for &v in param.value.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Map a premature end of input to a corruption error.
fn corrupt(err: io::Error) -> ParserError {
    if err.kind() == io::ErrorKind::UnexpectedEof {
        ParserError::Corrupt("unexpected end of file".into())
    } else {
        ParserError::Io(err)
    }
}

fn read_len<R: Read>(read: &mut R) -> Result<usize, ParserError> {
    let len = read.read_u64::<LittleEndian>().map_err(corrupt)?;
    if len > MAX_LEN {
        return Err(ParserError::Corrupt(format!("implausible length {}", len)));
    }
    Ok(len as usize)
}

fn read_str<R: Read>(read: &mut R) -> Result<String, ParserError> {
    let len = read_len(read)?;
    let mut buf = Vec::new();
    read.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(ParserError::Corrupt("unexpected end of file".into()));
    }
    String::from_utf8(buf).map_err(|_| ParserError::Corrupt("invalid UTF-8 string".into()))
}

fn read_list<R: Read>(read: &mut R) -> Result<Vec<String>, ParserError> {
    let count = read_len(read)?;
    (0..count).map(|_| read_str(read)).collect()
}

pub fn load_model<R: Read>(mut read: R) -> Result<ParserModel, ParserError> {
    let r = &mut read;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(corrupt)?;
    if &magic != MAGIC {
        return Err(ParserError::Corrupt("not a parser model file".into()));
    }
    let version = r.read_u32::<LittleEndian>().map_err(corrupt)?;
    if version != MODEL_VERSION {
        return Err(ParserError::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }

    let config: ParserConfig = serde_json::from_str(&read_str(r)?)
        .map_err(|err| ParserError::Corrupt(format!("configuration: {}", err)))?;

    let words = Indexer::new(read_list(r)?);
    let pos = Indexer::new(read_list(r)?);
    let labels = Indexer::new(read_list(r)?);
    let cluster_count = read_len(r)?;
    let clusters = match r.read_u8().map_err(corrupt)? {
        0 => None,
        1 => {
            let count = read_len(r)? as u32;
            let entries = read_len(r)?;
            let mut map = HashMap::with_capacity(entries);
            for _ in 0..entries {
                let word = read_str(r)?;
                let id = r.read_u32::<LittleEndian>().map_err(corrupt)?;
                map.insert(word, id);
            }
            let map = ClusterMap::new(map)
                .with_count(count)
                .ok_or_else(|| ParserError::Corrupt("cluster id out of range".into()))?;
            Some(map)
        }
        flag => return Err(ParserError::Corrupt(format!("bad cluster flag {}", flag))),
    };

    let mut store = ParamStore::default();
    let count = read_len(r)?;
    for _ in 0..count {
        let name = read_str(r)?;
        let trainable = r.read_u8().map_err(corrupt)? != 0;
        let rows = read_len(r)?;
        let cols = read_len(r)?;
        let size = rows
            .checked_mul(cols)
            .filter(|&s| (s as u64) <= MAX_LEN)
            .ok_or_else(|| ParserError::Corrupt(format!("parameter '{}' is too large", name)))?;
        let mut values = vec![0.0; size];
        r.read_f64_into::<LittleEndian>(&mut values)
            .map_err(corrupt)?;
        let value = Array2::from_shape_vec((rows, cols), values)
            .map_err(|err| ParserError::Corrupt(err.to_string()))?;
        store.add(name, value, trainable);
    }

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(ParserError::Corrupt(
            "trailing data after parameters".into(),
        ));
    }

    let vocab = Vocab {
        words,
        pos,
        labels,
        cluster_count,
        clusters,
    };
    check_shapes(&store, &config, &vocab)?;
    let layout = Layout::resolve(&store, &config)?;
    Ok(ParserModel {
        config,
        vocab,
        params: store,
        layout,
    })
}

fn check_shapes(
    store: &ParamStore,
    config: &ParserConfig,
    vocab: &Vocab,
) -> Result<(), ParserError> {
    for param in store.params() {
        let expected = match param.name.as_str() {
            "embed.words" => Some((vocab.words.len() + 1, config.embed_dim)),
            "embed.clusters" => Some((vocab.cluster_count + 1, config.cluster_embed_dim)),
            "embed.pos" => Some((vocab.pos.len() + 1, config.pos_embed_dim)),
            "label.b" => Some((1, vocab.labels.len())),
            _ => None,
        };
        if let Some(shape) = expected {
            if param.value.dim() != shape {
                return Err(ParserError::Corrupt(format!(
                    "parameter '{}' has shape {:?}, expected {:?}",
                    param.name,
                    param.value.dim(),
                    shape
                )));
            }
        }
    }
    Ok(())
}
