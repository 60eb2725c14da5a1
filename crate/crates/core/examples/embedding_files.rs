//! Writes embeddings and labels in the on-disk formats, reads them back,
//! selects a coreset and stores the result document.

use subzerocore::io::{
    read_embeddings, read_labels, read_result, write_embeddings, write_labels, write_result,
};
use subzerocore::synthetic::{gaussian_mixture, MixtureSpec};
use subzerocore::{select, EmbeddingSet, Method, SelectionConfig};

fn main() -> subzerocore::Result<()> {
    let dir = std::env::temp_dir().join("subzerocore-example");
    std::fs::create_dir_all(&dir)?;
    let emb = dir.join("train.emb");
    let labels = dir.join("train_labels.csv");
    let output = dir.join("coreset.json");

    let spec = MixtureSpec {
        classes: 3,
        per_class: 200,
        dim: 16,
        seed: 11,
    };
    let set = gaussian_mixture(&spec)?;
    write_embeddings(&emb, set.vectors())?;
    write_labels(&labels, set.labels())?;

    // embeddings are stored as f32, so the reloaded set is what gets selected
    let loaded = EmbeddingSet::with_row_ids(read_embeddings(&emb)?, read_labels(&labels)?)?;
    println!(
        "loaded {} rows of dimension {} from {}",
        loaded.len(),
        loaded.dim(),
        emb.display()
    );

    let result = select(&loaded, &SelectionConfig::new(0.8, Method::Subzerocore))?;
    write_result(&result, &output)?;
    let doc = read_result(&output)?;
    for class in &doc.per_class {
        println!(
            "class {} keeps {} ids, K={:?}",
            class.class,
            class.selected_ids.len(),
            class.k
        );
    }
    println!("wrote {}", output.display());
    Ok(())
}
