//! CoNLL-U reading and writing.
//!
//! Only the columns the pipeline uses are kept: ID, FORM, UPOS, HEAD,
//! DEPREL and the `Lang`/`TgtIdx` attributes of MISC. Everything else
//! is written back as `_`.

use std::io::{self, BufRead, Write};

use super::tree::{DependencyTree, Lang, Token, Treebank};
use super::ConlluError;

const SENT_ID_PREFIX: &str = "sent_id";

/// Read a treebank from a CoNLL-U stream.
pub fn read_conllu<R: BufRead>(read: R) -> Result<Treebank, ConlluError> {
    let mut trees = Vec::new();
    let mut builder = SentenceBuilder::default();

    for (idx, line) in read.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);

        if line.trim().is_empty() {
            if let Some(tree) = builder.finish(trees.len() + 1)? {
                trees.push(tree);
            }
            continue;
        }

        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == SENT_ID_PREFIX {
                    builder.sent_id = Some(value.trim().to_owned());
                }
            }
            continue;
        }

        builder.push_line(line, line_no)?;
    }

    if let Some(tree) = builder.finish(trees.len() + 1)? {
        trees.push(tree);
    }

    Ok(Treebank::new(trees))
}

/// Read a treebank from a string.
pub fn read_conllu_str(data: &str) -> Result<Treebank, ConlluError> {
    read_conllu(data.as_bytes())
}

#[derive(Default)]
struct SentenceBuilder {
    sent_id: Option<String>,
    tokens: Vec<Token>,
}

impl SentenceBuilder {
    fn push_line(&mut self, line: &str, line_no: usize) -> Result<(), ConlluError> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(ConlluError::parse(
                line_no,
                format!("expected 10 tab-separated columns, found {}", fields.len()),
            ));
        }

        // Multiword tokens and empty nodes.
        if fields[0].contains('-') || fields[0].contains('.') {
            return Ok(());
        }

        let id: usize = fields[0].parse().map_err(|_| {
            ConlluError::parse(line_no, format!("invalid token id '{}'", fields[0]))
        })?;
        if id != self.tokens.len() + 1 {
            return Err(ConlluError::parse(
                line_no,
                format!("expected token id {}, found {}", self.tokens.len() + 1, id),
            ));
        }

        let head: usize = fields[6]
            .parse()
            .map_err(|_| ConlluError::parse(line_no, format!("invalid head '{}'", fields[6])))?;

        let lang = parse_misc(fields[9]).map_err(|msg| ConlluError::parse(line_no, msg))?;

        self.tokens.push(Token {
            form: fields[1].to_owned(),
            upos: fields[3].to_owned(),
            cluster: None,
            head,
            deprel: fields[7].to_owned(),
            lang,
        });

        Ok(())
    }

    fn finish(&mut self, seq: usize) -> Result<Option<DependencyTree>, ConlluError> {
        let sent_id = self.sent_id.take();
        if self.tokens.is_empty() {
            return Ok(None);
        }

        let tree = DependencyTree::new(
            sent_id.unwrap_or_else(|| seq.to_string()),
            std::mem::take(&mut self.tokens),
        );
        let violations = tree.validate();
        if !violations.is_empty() {
            return Err(ConlluError::Structure {
                sent_id: tree.sent_id,
                violations,
            });
        }

        Ok(Some(tree))
    }
}

fn parse_misc(misc: &str) -> Result<Lang, String> {
    if misc == "_" {
        return Ok(Lang::Source);
    }

    let mut lang = None;
    let mut origin = None;
    for attr in misc.split('|') {
        match attr.split_once('=') {
            Some(("Lang", value)) => lang = Some(value),
            Some(("TgtIdx", value)) => {
                let idx: usize = value
                    .parse()
                    .map_err(|_| format!("invalid TgtIdx '{}'", value))?;
                if idx == 0 {
                    return Err("TgtIdx must be 1-based".to_owned());
                }
                origin = Some(idx);
            }
            _ => (),
        }
    }

    match (lang, origin) {
        (Some("tgt"), Some(origin_index)) => Ok(Lang::Target { origin_index }),
        (Some("tgt"), None) => Err("target-language token without TgtIdx".to_owned()),
        (None, _) | (Some("src"), _) => Ok(Lang::Source),
        (Some(other), _) => Err(format!("unknown language tag '{}'", other)),
    }
}

/// Write a treebank in CoNLL-U format.
///
/// Each sentence is preceded by a `# sent_id` comment and followed by a
/// blank line.
pub fn write_conllu<W: Write>(treebank: &Treebank, mut write: W) -> io::Result<()> {
    for tree in treebank.trees() {
        write_tree(tree, &mut write)?;
    }
    write.flush()
}

pub fn write_tree<W: Write>(tree: &DependencyTree, write: &mut W) -> io::Result<()> {
    writeln!(write, "# {} = {}", SENT_ID_PREFIX, tree.sent_id)?;
    for (k, token) in tree.tokens.iter().enumerate() {
        let misc = match token.lang {
            Lang::Source => "_".to_owned(),
            Lang::Target { origin_index } => format!("Lang=tgt|TgtIdx={}", origin_index),
        };
        writeln!(
            write,
            "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t{}",
            k + 1,
            token.form,
            token.upos,
            token.head,
            token.deprel,
            misc
        )?;
    }
    writeln!(write)
}

/// Serialize a treebank to a string.
pub fn to_conllu_string(treebank: &Treebank) -> String {
    let mut buf = Vec::new();
    write_conllu(treebank, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CoNLL-U output is UTF-8")
}
