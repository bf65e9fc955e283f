//! Parse structure expressions, list their minimal cut sets and classify
//! a set of component lifetimes.

use masked_reliability::structures::SystemStructure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let systems = [
        ("series", SystemStructure::series(3)),
        ("2-of-3", SystemStructure::k_out_of_n(2, 3)?),
        ("bridge", SystemStructure::bridge()),
        ("nested", "min(max(1,2), max(min(3,4), 5))".parse()?),
    ];
    for (name, s) in &systems {
        let cuts: Vec<String> = s
            .minimal_cut_sets()?
            .iter()
            .map(|c| format!("{:?}", c.one_based()))
            .collect();
        println!("{name:>7}: {}", cuts.join(" "));
    }

    let bridge = &systems[2].1;
    let x = [3.0, 5.0, 2.0, 4.0, 6.0];
    let class = bridge.classify_components(&x)?;
    println!("\nbridge with lifetimes {x:?}");
    println!("system fails at {}", class.time);
    println!("censor codes {:?}", class.codes);
    println!("failing cut {:?}", bridge.masked_candidate_set(&x)?.one_based());
    Ok(())
}
