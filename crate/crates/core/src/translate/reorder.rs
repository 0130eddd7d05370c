use crate::conllu::{DependencyTree, Token};

use super::TranslateError;

/// Sort every maximal run of target-language tokens by translation
/// order.
///
/// Source tokens stay in place and runs are not moved relative to each
/// other. Arcs follow their tokens, so the set of dependencies is
/// unchanged.
pub fn reorder(tree: &DependencyTree) -> Result<DependencyTree, TranslateError> {
    let n = tree.len();
    // order[new_position] = old id
    let mut order: Vec<usize> = (1..=n).collect();

    let mut start = 0;
    while start < n {
        if !tree.tokens[start].lang.is_target() {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < n && tree.tokens[end].lang.is_target() {
            end += 1;
        }
        order[start..end].sort_by_key(|&id| tree.token(id).lang.origin_index());
        start = end;
    }

    let mut new_ids = vec![0; n + 1];
    for (pos, &old) in order.iter().enumerate() {
        new_ids[old] = pos + 1;
    }

    let tokens: Vec<Token> = order
        .iter()
        .map(|&old| {
            let token = tree.token(old);
            Token {
                head: new_ids[token.head],
                ..token.clone()
            }
        })
        .collect();

    let result = DependencyTree::new(tree.sent_id.clone(), tokens);
    super::check_output(&result)?;
    Ok(result)
}
