pub mod cantor;
pub mod measure;
pub mod num;
pub mod par;
pub mod profile;
pub mod quad;
pub mod report;
pub mod series;
pub mod sim;
pub mod specfile;
pub mod structure;
