//! Build a small constrained problem, fold in a penalty and solve it exactly.
//!
//! Pick two of four items (exactly-two constraint) while maximizing value
//! with a pairwise conflict between items 0 and 1.

use std::collections::BTreeMap;

use qsplit_toolkit::qubo::{parse_qubo_file, serialize_qubo_file, LinearConstraint, Sense, VariableMap};
use qsplit_toolkit::samplers::exhaustive_solve;
use qsplit_toolkit::QuboMatrix;

fn main() -> qsplit_toolkit::Result<()> {
    let value = QuboMatrix::from_entries(4, [(0, 0, 3.0), (1, 1, 2.0), (2, 2, 2.5), (3, 3, 1.0), (0, 1, -4.0)], 0.0)?;
    let cost = value.to_minimization(Sense::Maximize);
    let pick_two = LinearConstraint::new((0..4).map(|i| (i, 1.0)), 2.0);
    let q = cost.compose_penalty(&[pick_two], 10.0)?;

    let best = exhaustive_solve(&q)?;
    for s in best.samples.iter().take(3) {
        println!("{}  energy {:7.3}", s.assignment, s.energy);
    }

    // condition on item 2 being taken
    let (sub, free) = q.fix_variables(&BTreeMap::from([(2, 1)]))?;
    let sub_best = exhaustive_solve(&sub)?.samples.best().cloned().unwrap();
    println!("with item 2 fixed: free vars {free:?} -> {} energy {:.3}", sub_best.assignment, sub_best.energy);

    // two 3-bit integers packed into binary variables
    let map = VariableMap::encode_integers(2, 3)?;
    let x = map.encode(&[5, 2])?;
    println!("integers [5, 2] -> bits {x} -> {:?}", map.decode(&x)?);

    let text = serialize_qubo_file(&q);
    assert_eq!(parse_qubo_file(&text)?, q);
    print!("file format:\n{text}");
    Ok(())
}
