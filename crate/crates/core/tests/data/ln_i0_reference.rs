// ln I0(x) at 50 log-spaced arguments in [1e-6, 1e4], 50 significant digits (mpmath, 60-digit working precision).
#[allow(clippy::excessive_precision)]
pub const LN_I0_REFERENCE: [(f64, f64); 50] = [
    (1e-06, 0.00000000000024999999999998437500000000173611111111088731553813),
    (1.5998587196060574e-06, 0.00000000000063988698067478098430705241750151096773274104802932),
    (2.5595479226995334e-06, 0.0000000000016378213921482035365639895135323212505836093646168),
    (4.094915062380427e-06, 0.0000000000041920823420231306985913416182532033014909023418189),
    (6.5512855685955095e-06, 0.000000000010729835650293164709296513198736146164047635343172),
    (1.0481131341546853e-05, 0.000000000027463528549500372278837105347590468884102558624397),
    (1.67683293681101e-05, 0.000000000070294217448120597136045690742555341230174508107777),
    (2.6826957952797274e-05, 0.00000000017992141824219529742761869980912012467771555196979),
    (4.291934260128778e-05, 0.00000000046051749227865993533211573446229213291996532977889),
    (6.866488450042999e-05, 0.0000000011787165905170044691303703146521139606337123334162),
    (0.00010985411419875583, 0.0000000030169815993227773203238199571628418605690030718638),
    (0.00017575106248547912, 0.0000000077221089762859547515306735103236823261625313392052),
    (0.0002811768697974231, 0.000000019765107929604382697638296906584233654247814803821),
    (0.0004498432668969444, 0.000000050589740553298424248550909671447304439410831047422),
    (0.0007196856730011522, 0.00000012948686278906840427348051166762595642849767363659),
    (0.0011513953993264468, 0.00000033142781393642750374424046638170106595573324741398),
    (0.0018420699693267163, 0.00000084830526306836906661426995072267477333855120523989),
    (0.0029470517025518097, 0.00000217127725576700753439476307435834149000492781619),
    (0.004714866363457394, 0.0000055574834849074325066018217147828856216488626907446),
    (0.007543120063354615, 0.000014224614487591427695734569883765576762495203524503),
    (0.012067926406393288, 0.0000364083805443173420166544690818082703716954524148),
    (0.019306977288832496, 0.000093187672011080606203164019452631417315891732210814),
    (0.030888435964774787, 0.00023850964718611383811273729273139010451451599103026),
    (0.04941713361323838, 0.00061042011729871301883796520303734511312426368780631),
    (0.07906043210907701, 0.0015620279455795693216450612844229381701720176869502),
    (0.12648552168552957, 0.0039956545999843143658307147992273808933522460070973),
    (0.20235896477251555, 0.010211205725460664475179247684832802755584824683251),
    (0.32374575428176466, 0.026033153628626548992569625702714980047363625497923),
    (0.5179474679231213, 0.065975287304384700281357810564781537130556592963549),
    (0.8286427728546842, 0.16481183795014901050154776574039433357000458888379),
    (1.325711365590108, 0.39881832595659361177713499277270195363202642718383),
    (2.1209508879201926, 0.90955186795376580027614245181003332086933015448201),
    (3.39322177189533, 1.9090234405563200392581572890002615793404837344096),
    (5.428675439323859, 3.6896573605940058002887406350064572589378256768202),
    (8.68511373751352, 6.7007145102249181923621711618875996586354156889101),
    (13.894954943731388, 11.669600782709828881894354585787809478019368168677),
    (22.229964825261955, 19.766061620504079441895585170898824536378207620758),
    (35.564803062231285, 32.863751932005163630854845918864772092326439837321),
    (56.89866029018293, 53.961302416085806036151722923720250963541966291697),
    (91.02981779915227, 87.856666512168063777703496808977834457338970512829),
    (145.63484775012444, 142.22621927303935061867820473156237984046899539925),
    (232.99518105153717, 229.35127128100589005755375780863816542788544020028),
    (372.7593720314938, 368.88030273819413593921219967177617138587221430931),
    (596.3623316594636, 592.24817869573372161921592606508690502479198596074),
    (954.0954763499924, 949.74628702642737500520968617384168910469756867056),
    (1526.4179671752365, 1521.8337710241579072805526347450301944539541669321),
    (2442.053094548655, 2437.2339100140364324018668968809436145180469645575),
    (3906.9399370546207, 3901.8857756589734404131977079997354683865027882667),
    (6250.551925273976, 6245.2627942171676276605555899010807166587768433879),
    (10000.0, 9994.4759037814323010045087002606395186548758624764),
];
