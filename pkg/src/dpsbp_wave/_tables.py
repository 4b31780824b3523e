"""Diagonal-norm upwind DP-SBP coefficient tables.

Each entry describes a unit-spacing operator family: the interior stencil of
H D+ (offsets relative to the row index), the left-boundary norm weights and
the top-left corner block of Q+ = H D+. The right boundary and D- follow from
the reflection relation Q-[i, j] = -Q+[n-1-i, n-1-j] and the SBP identity.
Values are exact rationals or full-precision decimals;
``tools/derive_upwind_tables.py`` regenerates them.
"""

UPWIND_TABLES = {2: {'offsets': [0, 1, 2],
     'interior': ['-3/2', '2', '-1/2'],
     'norm': ['1/4', '5/4'],
     'corner': [['-3/4', '5/4'], ['-1/4', '-5/4']]},
 4: {'offsets': [-1, 0, 1, 2, 3],
     'interior': ['-1/4', '-5/6', '3/2', '-1/2', '1/12'],
     'norm': ['49/144', '61/48', '41/48', '149/144'],
     'corner': [['-25/48', '205/288', '-29/144', '1/96'],
                ['-169/288', '-11/48', '33/32', '-43/144'],
                ['11/144', '-13/32', '-29/48', '389/288'],
                ['1/32', '-11/144', '-65/288', '-13/16']]},
 6: {'offsets': [-2, -1, 0, 1, 2, 3, 4],
     'interior': ['1/30', '-2/5', '-7/12', '4/3', '-1/2', '2/15', '-1/60'],
     'norm': ['13613/43200',
              '12049/8640',
              '535/864',
              '1079/864',
              '7841/8640',
              '43837/43200'],
     'corner': [['-0.5049459291113872',
                 '0.668992932677721',
                 '-0.09491907539948083',
                 '-0.0977619120873446',
                 '0.013923224478443031',
                 '0.014710759442048605'],
                ['-0.6294797325666139',
                 '-0.08646090129960833',
                 '0.5975467950621035',
                 '0.13996170012933068',
                 '0.026118297401345962',
                 '-0.047686158726557876'],
                ['0.03578485718279725',
                 '-0.30099158577630775',
                 '-0.30577266082150695',
                 '0.8340531845536541',
                 '-0.3616259590811722',
                 '0.11521883060920224'],
                ['0.13700394829849755',
                 '-0.3872285135024888',
                 '-0.17073962650588445',
                 '-0.49104674467461146',
                 '1.2093640887917512',
                 '-0.4140198190739307'],
                ['-0.023598151581254206',
                 '0.07287091132891431',
                 '-0.03758160481175714',
                 '-0.34226071179974643',
                 '-0.5670831308561034',
                 '1.2809860210532802'],
                ['-0.014764992222039431',
                 '0.03281715657176958',
                 '0.01146617247652587',
                 '-0.04294551612128226',
                 '-0.35402985406759796',
                 '-0.5825429666373758']]},
 8: {'offsets': [-3, -2, -1, 0, 1, 2, 3, 4, 5],
     'interior': ['-1/168',
                  '1/14',
                  '-1/2',
                  '-9/20',
                  '5/4',
                  '-1/2',
                  '1/6',
                  '-1/28',
                  '1/280'],
     'norm': ['0.29483965576971527',
              '1.5260777667548502',
              '103373/403200',
              '261259/145152',
              '298231/725760',
              '515917/403200',
              '0.9229384369488536',
              '1.0093848812673218'],
     'corner': [['-0.500431706122153',
                 '0.6676156975742058',
                 '-0.024223779947444093',
                 '-0.21582769881210864',
                 '0.010370496287526357',
                 '0.08446510593349114',
                 '-0.013123904103785116',
                 '-0.008844210809732404'],
                ['-0.6637973942749276',
                 '-0.009460224494674128',
                 '0.18918253776191138',
                 '0.6822913019764058',
                 '-0.020503085985274117',
                 '-0.23584300147981072',
                 '0.035382704337951536',
                 '0.02274716215841787'],
                ['0.018111897466151713',
                 '-0.15222762090969943',
                 '-0.04749246116119336',
                 '0.24184591415466702',
                 '-0.09014438402752652',
                 '0.043630227765673754',
                 '-0.016547659479033052',
                 '0.0028240861909598664'],
                ['0.21933199028010866',
                 '-0.7168997668719791',
                 '-0.10732916848067915',
                 '-0.13983919244388443',
                 '0.4980314257219286',
                 '0.2625378856833743',
                 '0.046579245704109075',
                 '-0.06598384816440651'],
                ['-0.009415474781455626',
                 '0.03415614135767579',
                 '-0.02325582564356325',
                 '-0.15139481780783756',
                 '-0.29022988326727345',
                 '0.6946938044438424',
                 '-0.3753618563584188',
                 '0.1529507691998876'],
                ['-0.08637998680552614',
                 '0.2366078217693078',
                 '0.01334492975149634',
                 '-0.5275794328047421',
                 '-0.09898333782736067',
                 '-0.40644674916133045',
                 '1.164845900654145',
                 '-0.42993295509979934'],
                ['0.013764913778577666',
                 '-0.03741766487177497',
                 '0.000709278629719238',
                 '0.07641601364635789',
                 '-0.01140007192015305',
                 '-0.4420846585913853',
                 '-0.445151568482855',
                 '1.210639948287704'],
                ['0.008815760459224291',
                 '-0.02237438355306175',
                 '-0.0009355109102471092',
                 '0.03408791209114204',
                 '0.002858841018132857',
                 '0.004999766358525833',
                 '-0.46209905274830415',
                 '-0.44987714223922154']]}}
