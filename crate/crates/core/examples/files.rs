//! Writing artifacts and driving the command line from code.

use loewner::cli::{self, MatrixFile};
use loewner::matcore::{HermMat, MatTuple};

fn main() -> loewner::Result<()> {
    let dir = std::env::temp_dir().join("loewner-files-example");
    std::fs::create_dir_all(&dir).map_err(|e| loewner::Error::Io(e.to_string()))?;
    let tuple = dir.join("pair.json");
    let x = MatTuple::new(vec![HermMat::scaled_identity(2, 4.0), HermMat::from_real_rows(2, &[9.0, 1.0, 1.0, 5.0])])?;
    MatrixFile::tuple(&x).write(&tuple)?;

    let out = dir.join("mean.json");
    let run = cli::run(["loewner", "mean", "karcher", tuple.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    print!("exit {}\n{}", run.code, run.stdout);
    let m = MatrixFile::read(&out)?.into_matrix()?;
    println!("read back {}x{} matrix", m.nrows(), m.ncols());

    let run = cli::run(["loewner", "check", "log1p", "derivative", "--n", "3", "--trials", "100", "--format", "json"]);
    println!("exit {}\n{}", run.code, run.stdout);
    Ok(())
}
