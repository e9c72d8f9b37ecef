use proptest::prelude::*;
use trifocal_calib::geometry::Intrinsics;
use trifocal_calib::io::{CorrespondenceFile, FileError, TripletBlock};

fn block(triples: Vec<[f64; 6]>) -> TripletBlock {
    TripletBlock { views: ["a".into(), "b".into(), "c".into()], triples }
}

proptest! {
    #[test]
    fn any_finite_coordinates_round_trip_exactly(
        triples in prop::collection::vec(prop::array::uniform6(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO), 7..20),
    ) {
        let file = CorrespondenceFile::new([4000, 3000], vec![block(triples)]);
        let back = CorrespondenceFile::parse(&file.to_json()).unwrap();
        prop_assert_eq!(back, file);
    }
}

#[test]
fn optional_fields_may_be_absent_or_present() {
    let triples = vec![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; 7];
    let mut file = CorrespondenceFile::new([640, 480], vec![block(triples)]);
    let json = file.to_json();
    assert!(!json.contains("ground_truth") && !json.contains("initial_intrinsics"));
    file.ground_truth = Some(Intrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap());
    assert_eq!(CorrespondenceFile::parse(&file.to_json()).unwrap(), file);
}

#[test]
fn schema_violations_are_named() {
    let cases = [
        (r#"{"schema_version":"1","image_size":[1,1],"triplets":[]}"#, "triplets"),
        (r#"{"schema_version":"1","image_size":[1,1],"extra":1,"triplets":[]}"#, "extra"),
        (r#"{"schema_version":"1","triplets":[]}"#, "image_size"),
        (
            r#"{"schema_version":"1","image_size":[1,1],"initial_intrinsics":{"fx":0,"fy":1,"cx":0,"cy":0},"triplets":[{"views":["a","b","c"],"triples":[[1,2,3,4,5,6],[1,2,3,4,5,6],[1,2,3,4,5,6],[1,2,3,4,5,6],[1,2,3,4,5,6],[1,2,3,4,5,6],[1,2,3,4,5,6]]}]}"#,
            "initial_intrinsics",
        ),
    ];
    for (text, field) in cases {
        let err = CorrespondenceFile::parse(text).unwrap_err();
        assert!(err.to_string().contains(field), "{field}: {err}");
    }
    assert!(matches!(
        CorrespondenceFile::read(std::path::Path::new("/nonexistent/file.json")),
        Err(FileError::Io { .. })
    ));
}
