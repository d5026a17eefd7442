pub mod long_video;
pub mod null_space;
pub mod report;
pub mod sensitivity;
